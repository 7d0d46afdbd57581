#pragma once

// File formats shared by the CLI, the local service and the UI: frontier,
// selected plan and simulation report. Each document carries
// `format_version`, a `kind` tag and the RunManifest of the command that
// produced it.

#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <optional>
#include <string>
#include <vector>

#include "faasplan/cost_model.hpp"
#include "faasplan/json_io.hpp"
#include "faasplan/pareto.hpp"
#include "faasplan/plan_model.hpp"
#include "faasplan/search.hpp"
#include "faasplan/simulator.hpp"

namespace faasplan {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string plan_path;
  std::string profile_path;
  std::string command;  // plan | select | simulate | serve
  json options = json::object();
  // UTC time from SOURCE_DATE_EPOCH; absent otherwise so reruns stay
  // byte-identical.
  std::optional<std::string> timestamp;
  std::string tool_version = kToolVersion;

  bool operator==(const RunManifest&) const = default;
};

inline std::optional<std::string> reproducible_timestamp() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  const long long secs = std::strtoll(env, &end, 10);
  if (*end != '\0' || secs < 0) return std::nullopt;
  const std::time_t t = static_cast<std::time_t>(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

inline RunManifest make_manifest(std::string command, std::string plan_path,
                                 std::string profile_path, json options) {
  return {std::move(plan_path), std::move(profile_path), std::move(command), std::move(options),
          reproducible_timestamp(), kToolVersion};
}

inline json to_json(const RunManifest& m) {
  return {{"plan_path", m.plan_path},
          {"profile_path", m.profile_path},
          {"command", m.command},
          {"options", m.options},
          {"timestamp", m.timestamp ? json(*m.timestamp) : json(nullptr)},
          {"tool_version", m.tool_version}};
}

inline RunManifest manifest_from_json(const json& j) {
  using namespace detail;
  const std::string where = "manifest";
  reject_unknown(j, {"plan_path", "profile_path", "command", "options", "timestamp", "tool_version"},
                 where);
  RunManifest m;
  m.plan_path = require<std::string>(j, "plan_path", where);
  m.profile_path = require<std::string>(j, "profile_path", where);
  m.command = require<std::string>(j, "command", where);
  if (m.command != "plan" && m.command != "select" && m.command != "simulate" &&
      m.command != "serve")
    throw ValidationError("manifest.command: unknown command '" + m.command + "'");
  m.options = j.value("options", json::object());
  if (j.contains("timestamp") && !j["timestamp"].is_null())
    m.timestamp = require<std::string>(j, "timestamp", where);
  m.tool_version = require<std::string>(j, "tool_version", where);
  return m;
}

// ---------------------------------------------------------------------------
// Breakdown pieces

inline json to_json(const StageConfig& c) {
  return {{"workers", c.workers},         {"cores", c.cores},     {"memory_mb", c.memory_mb},
          {"partitions", c.partitions},   {"storage", c.storage}};
}

inline StageConfig stage_config_from_json(const json& j, const std::string& where) {
  using namespace detail;
  reject_unknown(j, {"workers", "cores", "memory_mb", "partitions", "storage"}, where);
  return {require<std::uint32_t>(j, "workers", where), require<std::uint32_t>(j, "cores", where),
          require<double>(j, "memory_mb", where), require<std::uint32_t>(j, "partitions", where),
          require<std::string>(j, "storage", where)};
}

#define FAASPLAN_TIME_FIELDS(X)                                                               \
  X(t_inv_s) X(t_fetch_s) X(t_process_s) X(t_decompress_s) X(t_process_op_s)                  \
  X(t_fetch_process_s) X(t_compress_s) X(t_store_s) X(t_output_s) X(t_worker_s)               \
  X(cold_start_penalty_s) X(lat_storage_s) X(lat_storage_write_s) X(billed_worker_s)          \
  X(request_rate_rps)

inline json to_json(const TimeBreakdown& t) {
  json j;
#define X(f) j[#f] = t.f;
  FAASPLAN_TIME_FIELDS(X)
#undef X
  return j;
}

inline TimeBreakdown time_breakdown_from_json(const json& j, const std::string& where) {
  using namespace detail;
  TimeBreakdown t;
#define X(f) t.f = require<double>(j, #f, where);
  FAASPLAN_TIME_FIELDS(X)
#undef X
  reject_unknown(j,
                 {
#define X(f) #f,
                     FAASPLAN_TIME_FIELDS(X)
#undef X
                 },
                 where);
  return t;
}

#undef FAASPLAN_TIME_FIELDS

inline json to_json(const CostBreakdown& c) {
  return {{"c_workers", c.c_workers},
          {"c_storage", c.c_storage},
          {"c_stage", c.c_stage},
          {"n_read_requests", c.n_read_requests},
          {"n_write_requests", c.n_write_requests},
          {"d_output_gb", c.d_output_gb}};
}

inline CostBreakdown cost_breakdown_from_json(const json& j, const std::string& where) {
  using namespace detail;
  reject_unknown(
      j, {"c_workers", "c_storage", "c_stage", "n_read_requests", "n_write_requests", "d_output_gb"},
      where);
  return {require<double>(j, "c_workers", where),
          require<double>(j, "c_storage", where),
          require<double>(j, "c_stage", where),
          require<std::uint64_t>(j, "n_read_requests", where),
          require<std::uint64_t>(j, "n_write_requests", where),
          require<double>(j, "d_output_gb", where)};
}

// A frontier point: predicted totals plus one row per stage.
inline json to_json(const CandidatePlan& c, const LogicalPlan& plan) {
  json stages = json::array();
  for (const auto& [id, cfg] : c.stage_configs) {
    json row = to_json(cfg);
    row["id"] = id;
    row["operator"] = std::string(to_string(plan.stage(id).op));
    if (c.breakdown) {
      const auto& sp = c.breakdown->per_stage.at(id - 1);
      row["time"] = to_json(sp.time);
      row["cost"] = to_json(sp.cost);
      row["start_s"] = sp.start_s;
      row["finish_s"] = sp.finish_s;
    }
    stages.push_back(std::move(row));
  }
  return {{"predicted_cost", c.predicted_cost},
          {"predicted_latency_s", c.predicted_latency_s},
          {"stages", stages}};
}

inline CandidatePlan candidate_from_json(const json& j, const LogicalPlan& plan,
                                         const std::string& where) {
  using namespace detail;
  reject_unknown(j, {"predicted_cost", "predicted_latency_s", "stages", "index"}, where);
  CandidatePlan c;
  c.predicted_cost = require<double>(j, "predicted_cost", where);
  c.predicted_latency_s = require<double>(j, "predicted_latency_s", where);
  const auto it = j.find("stages");
  if (it == j.end() || !it->is_array()) throw ParseError(where + ".stages: expected an array");
  if (it->size() != plan.size())
    throw ValidationError(where + ".stages: expected " + std::to_string(plan.size()) + " stages");
  bool has_breakdown = !it->empty() && (*it)[0].contains("time");
  PredictionBreakdown bd;
  bd.per_stage.resize(plan.size());
  for (std::size_t i = 0; i < it->size(); ++i) {
    const auto& row = (*it)[i];
    const auto rw = where + ".stages[" + std::to_string(i) + "]";
    if (!row.is_object()) throw ParseError(rw + ": expected an object");
    reject_unknown(row, {"id", "operator", "workers", "cores", "memory_mb", "partitions", "storage",
                         "time", "cost", "start_s", "finish_s"},
                   rw);
    const auto id = require<StageId>(row, "id", rw);
    if (id < 1 || id > plan.size() || c.stage_configs.count(id))
      throw ValidationError(rw + ".id: invalid or repeated stage id " + std::to_string(id));
    json cfg_only = row;
    for (const char* k : {"id", "operator", "time", "cost", "start_s", "finish_s"}) cfg_only.erase(k);
    c.stage_configs[id] = stage_config_from_json(cfg_only, rw);
    if (has_breakdown) {
      auto& sp = bd.per_stage[id - 1];
      sp.id = id;
      sp.config = c.stage_configs[id];
      sp.time = time_breakdown_from_json(require<json>(row, "time", rw), rw + ".time");
      sp.cost = cost_breakdown_from_json(require<json>(row, "cost", rw), rw + ".cost");
      sp.start_s = require<double>(row, "start_s", rw);
      sp.finish_s = require<double>(row, "finish_s", rw);
    }
  }
  if (has_breakdown) {
    bd.total_cost = c.predicted_cost;
    bd.total_latency_s = c.predicted_latency_s;
    c.breakdown = std::move(bd);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Frontier document

struct FrontierDocument {
  RunManifest manifest;
  LogicalPlan plan;
  std::string profile_name;
  ParetoFrontier frontier;
  SearchStats stats;
  double planning_wall_time_s = 0;
};

inline json to_json(const FrontierDocument& d) {
  json points = json::array();
  for (std::size_t i = 0; i < d.frontier.points.size(); ++i) {
    json p = to_json(d.frontier.points[i], d.plan);
    p["index"] = i;
    points.push_back(std::move(p));
  }
  return {{"format_version", kFormatVersion},
          {"kind", "frontier"},
          {"manifest", to_json(d.manifest)},
          {"plan", to_json(d.plan)},
          {"profile_name", d.profile_name},
          {"knee_index", d.frontier.knee_index},
          {"points", points},
          {"search",
           {{"pruned_space_sizes", d.stats.pruned_space_sizes},
            {"stage_space_sizes", d.stats.stage_space_sizes},
            {"exhaustive_space_size", d.stats.exhaustive_space_size},
            {"stage_evaluations", d.stats.stage_evaluations},
            {"max_local_space", d.stats.max_local_space}}},
          {"diagnostics", {{"planning_wall_time_s", d.planning_wall_time_s}}}};
}

namespace detail {
inline void check_kind(const json& doc, const std::string& kind) {
  if (!doc.is_object()) throw ParseError(kind + ": expected an object");
  check_format_version(doc, kind, true);
  if (doc.value("kind", std::string()) != kind)
    throw ValidationError(kind + ": document kind is '" + doc.value("kind", std::string()) + "'");
}
}  // namespace detail

inline FrontierDocument frontier_from_json(const json& doc) {
  using namespace detail;
  check_kind(doc, "frontier");
  reject_unknown(doc, {"format_version", "kind", "manifest", "plan", "profile_name", "knee_index",
                       "points", "search", "diagnostics"},
                 "frontier");
  FrontierDocument d{manifest_from_json(require<json>(doc, "manifest", "frontier")),
                     logical_plan_from_json(require<json>(doc, "plan", "frontier")),
                     optional<std::string>(doc, "profile_name", "", "frontier"),
                     {},
                     {},
                     0.0};
  const auto pts = require<json>(doc, "points", "frontier");
  if (!pts.is_array()) throw ParseError("frontier.points: expected an array");
  for (std::size_t i = 0; i < pts.size(); ++i)
    d.frontier.points.push_back(
        candidate_from_json(pts[i], d.plan, "frontier.points[" + std::to_string(i) + "]"));
  d.frontier.knee_index = require<std::size_t>(doc, "knee_index", "frontier");
  if (!d.frontier.points.empty() && d.frontier.knee_index >= d.frontier.points.size())
    throw ValidationError("frontier.knee_index: out of range");
  if (auto it = doc.find("search"); it != doc.end()) {
    d.stats.pruned_space_sizes =
        optional<std::vector<std::size_t>>(*it, "pruned_space_sizes", {}, "frontier.search");
    d.stats.stage_space_sizes =
        optional<std::vector<std::size_t>>(*it, "stage_space_sizes", {}, "frontier.search");
    d.stats.exhaustive_space_size =
        optional<double>(*it, "exhaustive_space_size", 0.0, "frontier.search");
    d.stats.stage_evaluations = optional<std::size_t>(*it, "stage_evaluations", 0, "frontier.search");
    d.stats.max_local_space = optional<std::size_t>(*it, "max_local_space", 0, "frontier.search");
  }
  if (auto it = doc.find("diagnostics"); it != doc.end())
    d.planning_wall_time_s =
        optional<double>(*it, "planning_wall_time_s", 0.0, "frontier.diagnostics");
  return d;
}

inline FrontierDocument parse_frontier(std::string_view text) {
  return frontier_from_json(parse_json(text, "frontier"));
}

// ---------------------------------------------------------------------------
// Selected plan document

struct SelectedPlanDocument {
  RunManifest manifest;
  LogicalPlan plan;
  std::string preference;
  std::size_t index = 0;
  CandidatePlan candidate;
};

inline json to_json(const SelectedPlanDocument& d) {
  json point = to_json(d.candidate, d.plan);
  point["index"] = d.index;
  return {{"format_version", kFormatVersion},
          {"kind", "selected_plan"},
          {"manifest", to_json(d.manifest)},
          {"plan", to_json(d.plan)},
          {"preference", d.preference},
          {"index", d.index},
          {"point", point}};
}

inline SelectedPlanDocument selected_plan_from_json(const json& doc) {
  using namespace detail;
  check_kind(doc, "selected_plan");
  reject_unknown(doc, {"format_version", "kind", "manifest", "plan", "preference", "index", "point"},
                 "selected_plan");
  auto plan = logical_plan_from_json(require<json>(doc, "plan", "selected_plan"));
  auto cand = candidate_from_json(require<json>(doc, "point", "selected_plan"), plan,
                                  "selected_plan.point");
  return {manifest_from_json(require<json>(doc, "manifest", "selected_plan")), std::move(plan),
          require<std::string>(doc, "preference", "selected_plan"),
          require<std::size_t>(doc, "index", "selected_plan"), std::move(cand)};
}

inline SelectedPlanDocument parse_selected_plan(std::string_view text) {
  return selected_plan_from_json(parse_json(text, "selected plan"));
}

// ---------------------------------------------------------------------------
// Simulation report

inline json to_json(const SummaryStats& s) {
  return {{"mean", s.mean}, {"p5", s.p5}, {"p50", s.p50}, {"p95", s.p95}};
}

inline SummaryStats summary_from_json(const json& j, const std::string& where) {
  using namespace detail;
  reject_unknown(j, {"mean", "p5", "p50", "p95"}, where);
  return {require<double>(j, "mean", where), require<double>(j, "p5", where),
          require<double>(j, "p50", where), require<double>(j, "p95", where)};
}

inline json to_json(const SimulationResult& r) {
  json runs = json::array();
  for (std::size_t i = 0; i < r.per_run.size(); ++i) {
    const auto& x = r.per_run[i];
    runs.push_back({{"run", i},
                    {"latency_s", x.latency_s},
                    {"cost", x.cost},
                    {"cold_start_count", x.cold_start_count},
                    {"throttled_request_count", x.throttled_request_count}});
  }
  return {{"config",
           {{"seed", r.config.seed},
            {"runs", r.config.runs},
            {"jitter_cv", r.config.jitter_cv},
            {"throttle_noise_cv", r.config.throttle_noise_cv}}},
          {"seed_echo", r.seed_echo},
          {"per_run", runs},
          {"latency_stats", to_json(r.latency_stats)},
          {"cost_stats", to_json(r.cost_stats)}};
}

struct SimulationReportDocument {
  RunManifest manifest;
  std::size_t index = 0;  // frontier index of the simulated plan
  ValidationReport report;
};

inline json to_json(const SimulationReportDocument& d) {
  json doc = to_json(d.report.simulation);
  doc["format_version"] = kFormatVersion;
  doc["kind"] = "simulation_report";
  doc["manifest"] = to_json(d.manifest);
  doc["index"] = d.index;
  const auto& r = d.report;
  doc["comparison"] = {{"predicted_latency_s", r.predicted_latency_s},
                       {"predicted_cost", r.predicted_cost},
                       {"latency_rel_error", r.latency_rel_error},
                       {"cost_rel_error", r.cost_rel_error},
                       {"latency_within_p5_p95", r.latency_within_p5_p95},
                       {"cost_within_p5_p95", r.cost_within_p5_p95}};
  return doc;
}

inline SimulationReportDocument simulation_report_from_json(const json& doc) {
  using namespace detail;
  const std::string w = "simulation_report";
  check_kind(doc, w);
  reject_unknown(doc, {"format_version", "kind", "manifest", "index", "config", "seed_echo",
                       "per_run", "latency_stats", "cost_stats", "comparison"},
                 w);
  SimulationReportDocument d;
  d.manifest = manifest_from_json(require<json>(doc, "manifest", w));
  d.index = require<std::size_t>(doc, "index", w);
  auto& sim = d.report.simulation;
  const auto cfg = require<json>(doc, "config", w);
  reject_unknown(cfg, {"seed", "runs", "jitter_cv", "throttle_noise_cv"}, w + ".config");
  sim.config = {require<std::uint64_t>(cfg, "seed", w + ".config"),
                require<std::size_t>(cfg, "runs", w + ".config"),
                require<double>(cfg, "jitter_cv", w + ".config"),
                require<double>(cfg, "throttle_noise_cv", w + ".config")};
  sim.seed_echo = require<std::uint64_t>(doc, "seed_echo", w);
  const auto runs = require<json>(doc, "per_run", w);
  if (!runs.is_array()) throw ParseError(w + ".per_run: expected an array");
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto rw = w + ".per_run[" + std::to_string(i) + "]";
    const auto& x = runs[i];
    reject_unknown(x, {"run", "latency_s", "cost", "cold_start_count", "throttled_request_count"},
                   rw);
    sim.per_run.push_back({require<double>(x, "latency_s", rw), require<double>(x, "cost", rw),
                           require<std::uint64_t>(x, "cold_start_count", rw),
                           require<std::uint64_t>(x, "throttled_request_count", rw)});
  }
  sim.latency_stats = summary_from_json(require<json>(doc, "latency_stats", w), w + ".latency_stats");
  sim.cost_stats = summary_from_json(require<json>(doc, "cost_stats", w), w + ".cost_stats");
  const auto cmp = require<json>(doc, "comparison", w);
  const auto cw = w + ".comparison";
  reject_unknown(cmp, {"predicted_latency_s", "predicted_cost", "latency_rel_error",
                       "cost_rel_error", "latency_within_p5_p95", "cost_within_p5_p95"},
                 cw);
  auto& r = d.report;
  r.predicted_latency_s = require<double>(cmp, "predicted_latency_s", cw);
  r.predicted_cost = require<double>(cmp, "predicted_cost", cw);
  // JSON has no infinity; an unbounded relative error is written as null.
  auto rel = [&](const char* key) {
    if (cmp.contains(key) && cmp[key].is_null()) return static_cast<double>(INFINITY);
    return require<double>(cmp, key, cw);
  };
  r.latency_rel_error = rel("latency_rel_error");
  r.cost_rel_error = rel("cost_rel_error");
  r.latency_within_p5_p95 = require<bool>(cmp, "latency_within_p5_p95", cw);
  r.cost_within_p5_p95 = require<bool>(cmp, "cost_within_p5_p95", cw);
  return d;
}

inline SimulationReportDocument parse_simulation_report(std::string_view text) {
  return simulation_report_from_json(parse_json(text, "simulation report"));
}

}  // namespace faasplan
