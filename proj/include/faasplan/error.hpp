#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace faasplan {

// Base of everything the library throws. `exit_code()` is the stable CLI
// status the error maps to (0 ok, 1 validation, 2 I/O, 3 infeasible,
// 64 usage).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// A stage configuration the cost model cannot evaluate (e.g. the per-worker
// input does not fit into worker memory).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class EmptySpaceError : public Error {
 public:
  using Error::Error;
};

class OperatorUnprofiledError : public Error {
 public:
  using Error::Error;
};

class SpaceTooLargeError : public Error {
 public:
  SpaceTooLargeError(const std::string& what, double space_size)
      : Error(what), space_size_(space_size) {}
  double space_size() const noexcept { return space_size_; }

 private:
  double space_size_;
};

class BudgetInfeasibleError : public Error {
 public:
  BudgetInfeasibleError(const std::string& what, std::size_t nearest_index)
      : Error(what), nearest_index_(nearest_index) {}
  std::size_t nearest_index() const noexcept { return nearest_index_; }
  int exit_code() const noexcept override { return 3; }

 private:
  std::size_t nearest_index_;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

}  // namespace faasplan
