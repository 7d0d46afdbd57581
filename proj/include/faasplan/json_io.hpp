#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "faasplan/error.hpp"

namespace faasplan {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

// Canonical textual form of every artifact the tools write. Key order is
// the sorted order nlohmann::json keeps for objects, so equal documents
// serialize to identical bytes.
inline std::string dump_document(const json& doc) { return doc.dump(2) + "\n"; }

namespace detail {

// Strict-schema helpers: unknown keys are rejected so a typo never
// silently falls back to a default.
inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError(where + ": unknown field '" + key + "'");
  }
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(where + "." + key + ": required field missing");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T optional(const json& obj, const std::string& key, T fallback, const std::string& where,
           std::set<std::string>* defaulted = nullptr) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (defaulted) defaulted->insert(where + "." + key);
    return fallback;
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(where + "." + key + ": wrong type");
  }
}

inline void check_format_version(const json& doc, const std::string& what, bool required) {
  auto it = doc.find("format_version");
  if (it == doc.end()) {
    if (required) throw ValidationError(what + ": missing format_version");
    return;
  }
  if (!it->is_number_integer() || it->get<int>() != kFormatVersion)
    throw ValidationError(what + ": unsupported format_version " + it->dump());
}

}  // namespace detail
}  // namespace faasplan
