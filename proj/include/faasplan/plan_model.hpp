#pragma once

// Logical query-stage DAG: the planner's input. Stages carry the estimated
// input/output data volume (bytes); the planner never looks at rows.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "faasplan/error.hpp"
#include "faasplan/json_io.hpp"

namespace faasplan {

using StageId = std::uint32_t;

enum class OperatorKind { Scan, Join, Aggregate, GlobalAggregate, Sort, Project };

inline constexpr std::array<OperatorKind, 6> kAllOperators = {
    OperatorKind::Scan, OperatorKind::Join,  OperatorKind::Aggregate,
    OperatorKind::GlobalAggregate, OperatorKind::Sort, OperatorKind::Project};

inline std::string_view to_string(OperatorKind op) {
  switch (op) {
    case OperatorKind::Scan: return "scan";
    case OperatorKind::Join: return "join";
    case OperatorKind::Aggregate: return "aggregate";
    case OperatorKind::GlobalAggregate: return "global_aggregate";
    case OperatorKind::Sort: return "sort";
    case OperatorKind::Project: return "project";
  }
  return "?";
}

inline std::optional<OperatorKind> operator_from_string(std::string_view s) {
  for (auto op : kAllOperators)
    if (to_string(op) == s) return op;
  return std::nullopt;
}

struct LogicalStage {
  StageId id = 0;
  OperatorKind op = OperatorKind::Scan;
  std::vector<StageId> producers;
  std::uint64_t input_bytes = 0;
  std::uint64_t output_bytes = 0;
  // Metadata only; the cardinalities are authoritative.
  std::optional<double> selectivity;

  bool operator==(const LogicalStage&) const = default;
};

// Deterministic topological order over an arbitrary stage list: Kahn's
// algorithm with the smallest ready id taken first. Throws ValidationError on
// dangling producers or cycles.
inline std::vector<StageId> topological_order(std::span<const LogicalStage> stages) {
  std::vector<StageId> ids;
  for (const auto& s : stages) ids.push_back(s.id);
  std::sort(ids.begin(), ids.end());
  auto index_of = [&](StageId id) -> std::optional<std::size_t> {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - ids.begin());
  };

  std::vector<std::size_t> indegree(ids.size(), 0);
  std::vector<std::vector<std::size_t>> consumers(ids.size());
  for (const auto& s : stages) {
    auto self = *index_of(s.id);
    for (StageId p : s.producers) {
      auto pi = index_of(p);
      if (!pi)
        throw ValidationError("stage " + std::to_string(s.id) + ": unknown producer " +
                              std::to_string(p));
      consumers[*pi].push_back(self);
      ++indegree[self];
    }
  }

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<StageId> order;
  order.reserve(ids.size());
  while (!ready.empty()) {
    auto i = ready.top();
    ready.pop();
    order.push_back(ids[i]);
    for (auto c : consumers[i])
      if (--indegree[c] == 0) ready.push(c);
  }
  if (order.size() != ids.size()) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (indegree[i] != 0)
        throw ValidationError("stage " + std::to_string(ids[i]) + ": part of a cycle");
  }
  return order;
}

class LogicalPlan {
 public:
  LogicalPlan() = default;

  // Validates every structural invariant; throws ValidationError naming the
  // offending stage.
  LogicalPlan(std::string name, std::vector<LogicalStage> stages)
      : name_(std::move(name)), stages_(std::move(stages)) {
    validate();
    consumers_.assign(stages_.size(), {});
    for (const auto& s : stages_)
      for (StageId p : s.producers) consumers_[p - 1].push_back(s.id);
    order_ = topological_order(stages_);
  }

  const std::string& name() const { return name_; }
  std::size_t size() const { return stages_.size(); }
  const std::vector<LogicalStage>& stages() const { return stages_; }
  const LogicalStage& stage(StageId id) const { return stages_.at(id - 1); }
  const std::vector<StageId>& consumers(StageId id) const { return consumers_.at(id - 1); }
  bool is_terminal(StageId id) const { return consumers(id).empty(); }
  const std::vector<StageId>& topological_stage_order() const { return order_; }

  bool operator==(const LogicalPlan& o) const {
    return name_ == o.name_ && stages_ == o.stages_;
  }

 private:
  void validate() const {
    if (stages_.empty()) throw ValidationError("plan has no stages");
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      const auto& s = stages_[i];
      const auto sid = "stage " + std::to_string(s.id);
      if (s.id != i + 1)
        throw ValidationError(sid + ": ids must be contiguous 1..N in file order (expected " +
                              std::to_string(i + 1) + ")");
      std::vector<StageId> seen;
      for (StageId p : s.producers) {
        if (p < 1 || p >= s.id)
          throw ValidationError(sid + ": producer " + std::to_string(p) +
                                " does not reference an earlier stage");
        if (std::find(seen.begin(), seen.end(), p) != seen.end())
          throw ValidationError(sid + ": duplicate producer " + std::to_string(p));
        seen.push_back(p);
      }
      if (s.op == OperatorKind::Scan && !s.producers.empty())
        throw ValidationError(sid + ": scan stages cannot have producers");
      if (s.op != OperatorKind::Scan && s.producers.empty())
        throw ValidationError(sid + ": non-scan stage needs at least one producer");
      if (s.op == OperatorKind::GlobalAggregate && s.producers.size() != 1)
        throw ValidationError(sid + ": global_aggregate needs exactly one producer");
      if (s.selectivity && (*s.selectivity < 0.0 || *s.selectivity > 1.0))
        throw ValidationError(sid + ": selectivity outside [0,1]");
      if (s.op != OperatorKind::Scan) {
        std::uint64_t sum = 0;
        for (StageId p : s.producers) sum += stages_[p - 1].output_bytes;
        if (sum != s.input_bytes)
          throw ValidationError(sid + ": input_bytes " + std::to_string(s.input_bytes) +
                                " != sum of producer output_bytes " + std::to_string(sum));
      }
    }
    // One query: the DAG must be weakly connected.
    std::vector<std::size_t> parent(stages_.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (const auto& s : stages_)
      for (StageId p : s.producers) parent[find(s.id - 1)] = find(p - 1);
    for (const auto& s : stages_)
      if (find(s.id - 1) != find(0))
        throw ValidationError("stage " + std::to_string(s.id) +
                              ": not connected to the rest of the plan");
  }

  std::string name_;
  std::vector<LogicalStage> stages_;
  std::vector<std::vector<StageId>> consumers_;
  std::vector<StageId> order_;
};

// ---------------------------------------------------------------------------
// JSON representation
//
//   { "format_version": 1, "name": "...",
//     "stages": [ { "id": 1, "operator": "scan", "producers": [],
//                   "input_bytes": 123, "output_bytes": 45,
//                   "selectivity": 0.4 }, ... ] }

inline json to_json(const LogicalPlan& plan) {
  json stages = json::array();
  for (const auto& s : plan.stages()) {
    json js = {{"id", s.id},
               {"operator", std::string(to_string(s.op))},
               {"producers", s.producers},
               {"input_bytes", s.input_bytes},
               {"output_bytes", s.output_bytes}};
    if (s.selectivity) js["selectivity"] = *s.selectivity;
    stages.push_back(std::move(js));
  }
  return {{"format_version", kFormatVersion}, {"name", plan.name()}, {"stages", stages}};
}

inline LogicalPlan logical_plan_from_json(const json& doc) {
  using namespace detail;
  reject_unknown(doc, {"format_version", "name", "stages"}, "plan");
  check_format_version(doc, "plan", false);
  auto name = optional<std::string>(doc, "name", "", "plan");
  auto it = doc.find("stages");
  if (it == doc.end() || !it->is_array()) throw ParseError("plan.stages: expected an array");
  std::vector<LogicalStage> stages;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto& js = (*it)[i];
    auto where = "plan.stages[" + std::to_string(i) + "]";
    reject_unknown(js, {"id", "operator", "producers", "input_bytes", "output_bytes", "selectivity"},
                   where);
    LogicalStage s;
    s.id = require<StageId>(js, "id", where);
    auto op_name = require<std::string>(js, "operator", where);
    auto op = operator_from_string(op_name);
    if (!op) throw ParseError(where + ".operator: unknown operator '" + op_name + "'");
    s.op = *op;
    s.producers = optional<std::vector<StageId>>(js, "producers", {}, where);
    for (const char* key : {"input_bytes", "output_bytes"})
      if (js.contains(key) && !js[key].is_number_unsigned())
        throw ValidationError(where + "." + key + ": must be a non-negative integer");
    s.input_bytes = require<std::uint64_t>(js, "input_bytes", where);
    s.output_bytes = require<std::uint64_t>(js, "output_bytes", where);
    if (js.contains("selectivity")) s.selectivity = require<double>(js, "selectivity", where);
    stages.push_back(std::move(s));
  }
  return LogicalPlan(std::move(name), std::move(stages));
}

inline LogicalPlan parse_logical_plan(std::string_view text) {
  return logical_plan_from_json(parse_json(text, "plan"));
}

inline LogicalPlan load_logical_plan(const std::filesystem::path& path) {
  return parse_logical_plan(read_text_file(path));
}

}  // namespace faasplan
