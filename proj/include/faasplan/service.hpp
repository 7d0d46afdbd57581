#pragma once

// Request handling for the local frontier service, independent of any HTTP
// library. The loaded frontier and profile are immutable, so handlers can run
// concurrently.

#include <charconv>
#include <string>
#include <string_view>

#include "faasplan/artifacts.hpp"
#include "faasplan/calibration.hpp"
#include "faasplan/pareto.hpp"
#include "faasplan/simulator.hpp"

namespace faasplan {

struct ServiceResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class FrontierService {
 public:
  FrontierService(std::string frontier_text, CalibrationProfile profile, std::string frontier_path,
                  std::string profile_path)
      : frontier_text_(std::move(frontier_text)),
        doc_(parse_frontier(frontier_text_)),
        profile_(std::move(profile)),
        frontier_path_(std::move(frontier_path)),
        profile_path_(std::move(profile_path)) {
    profile_.require_operators(doc_.plan);
  }

  const FrontierDocument& frontier() const { return doc_; }

  // GET /frontier: the frontier file, byte for byte.
  ServiceResponse get_frontier() const { return {200, frontier_text_}; }

  // GET /plan/{index}
  ServiceResponse get_plan(std::string_view index_text) const {
    const auto index = parse_index(index_text);
    if (!index) return error(404, "no frontier point '" + std::string(index_text) + "'");
    json point = to_json(doc_.frontier.points[*index], doc_.plan);
    point["index"] = *index;
    json body = {{"format_version", kFormatVersion},
                 {"kind", "plan_point"},
                 {"index", *index},
                 {"is_knee", *index == doc_.frontier.knee_index},
                 {"point", point}};
    return {200, dump_document(body)};
  }

  // POST /select {"preference": "..."}: the selected-plan document.
  ServiceResponse post_select(std::string_view body) const {
    json req;
    try {
      req = parse_json(body, "request");
      detail::reject_unknown(req, {"preference"}, "request");
      const auto pref = parse_preference(detail::require<std::string>(req, "preference", "request"));
      const auto idx =
          select_index(objectives(doc_.frontier.points), pref, doc_.frontier.knee_index);
      SelectedPlanDocument out{
          make_manifest("select", doc_.manifest.plan_path, doc_.manifest.profile_path,
                        {{"frontier", frontier_path_}, {"preference", pref.to_string()}}),
          doc_.plan, pref.to_string(), idx, doc_.frontier.points[idx]};
      return {200, dump_document(to_json(out))};
    } catch (const BudgetInfeasibleError& e) {
      return {422, dump_document({{"error", e.what()}, {"nearest_index", e.nearest_index()}})};
    } catch (const Error& e) {
      return error(400, e.what());
    }
  }

  // POST /simulate {"index": i, "seed": s, "runs": k, ...noise overrides}
  ServiceResponse post_simulate(std::string_view body) const {
    json req;
    SimulationConfig sim;
    std::size_t index = 0;
    try {
      req = parse_json(body, "request");
      detail::reject_unknown(req, {"index", "seed", "runs", "jitter_cv", "throttle_noise_cv"},
                             "request");
      if (!req.contains("index") || !req["index"].is_number_unsigned())
        return error(400, "request.index: expected a non-negative integer");
      index = req["index"].get<std::size_t>();
      if (req.contains("seed") && !req["seed"].is_number_unsigned())
        return error(400, "request.seed: expected a non-negative integer");
      sim.seed = detail::optional<std::uint64_t>(req, "seed", 0, "request");
      if (req.contains("runs") && !req["runs"].is_number_unsigned())
        return error(400, "request.runs: expected a positive integer");
      sim.runs = detail::optional<std::size_t>(req, "runs", 100, "request");
      sim.jitter_cv = detail::optional<double>(req, "jitter_cv", sim.jitter_cv, "request");
      sim.throttle_noise_cv =
          detail::optional<double>(req, "throttle_noise_cv", sim.throttle_noise_cv, "request");
      if (sim.runs < 1 || sim.runs > kMaxRuns)
        return error(400, "request.runs: must be in [1, " + std::to_string(kMaxRuns) + "]");
      if (!(sim.jitter_cv >= 0) || !(sim.throttle_noise_cv >= 0))
        return error(400, "request: noise coefficients must be >= 0");
    } catch (const Error& e) {
      return error(400, e.what());
    }
    if (index >= doc_.frontier.points.size())
      return error(404, "no frontier point " + std::to_string(index));
    try {
      SimulationReportDocument out{
          make_manifest("serve", doc_.manifest.plan_path, profile_path_, req), index,
          compare_prediction(doc_.plan, doc_.frontier.points[index].stage_configs, profile_, sim)};
      return {200, dump_document(to_json(out))};
    } catch (const Error& e) {
      return error(400, e.what());
    }
  }

  static constexpr std::size_t kMaxRuns = 100000;

 private:
  static ServiceResponse error(int status, const std::string& msg) {
    return {status, dump_document({{"error", msg}})};
  }

  std::optional<std::size_t> parse_index(std::string_view text) const {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc() || ptr != end || v >= doc_.frontier.points.size())
      return std::nullopt;
    return v;
  }

  std::string frontier_text_;
  FrontierDocument doc_;
  CalibrationProfile profile_;
  std::string frontier_path_;
  std::string profile_path_;
};

}  // namespace faasplan
