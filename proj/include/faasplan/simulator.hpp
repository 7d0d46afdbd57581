#pragma once

// Seeded stochastic replay of a configured plan. Workers cold-start
// independently (Bernoulli with the profile's step probability), transfer and
// compute terms get multiplicative lognormal noise (mean 1), and the request
// rate feeding the throttling curve is noised per service. Stage latency is
// the slowest worker; stages are combined with the same barrier semantics as
// the deterministic model, and money is recomputed from each worker's own
// duration.
//
// The simulator deliberately runs the deterministic model's formulas: it
// checks how predictions hold up under variability, not real-cloud fidelity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "faasplan/calibration.hpp"
#include "faasplan/cost_model.hpp"
#include "faasplan/error.hpp"
#include "faasplan/plan_model.hpp"

namespace faasplan {

struct SimulationConfig {
  std::uint64_t seed = 0;
  std::size_t runs = 1;
  double jitter_cv = 0.05;
  double throttle_noise_cv = 0.2;
};

struct RunRecord {
  double latency_s = 0;
  double cost = 0;
  std::uint64_t cold_start_count = 0;
  std::uint64_t throttled_request_count = 0;
  bool operator==(const RunRecord&) const = default;
};

struct SummaryStats {
  double mean = 0, p5 = 0, p50 = 0, p95 = 0;
  bool operator==(const SummaryStats&) const = default;
};

struct SimulationResult {
  std::vector<RunRecord> per_run;  // by run index
  SummaryStats latency_stats;
  SummaryStats cost_stats;
  std::uint64_t seed_echo = 0;
  SimulationConfig config;
  bool operator==(const SimulationResult& o) const {
    return per_run == o.per_run && latency_stats == o.latency_stats &&
           cost_stats == o.cost_stats && seed_echo == o.seed_echo;
  }
};

// Percentile with linear interpolation between order statistics.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
}

// Shifted mean: exact when all values are equal.
inline double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += v - values.front();
  return values.front() + acc / static_cast<double>(values.size());
}

inline SummaryStats summarize(const std::vector<double>& values) {
  return {mean_of(values), percentile(values, 0.05), percentile(values, 0.50),
          percentile(values, 0.95)};
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Random source with a fully specified sequence (mt19937_64 output plus
// explicit transforms), so a seed reproduces across standard libraries.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Lognormal with mean 1 and the given coefficient of variation.
  double lognormal_unit_mean(double cv) {
    if (cv == 0.0) return 1.0;
    const double var = std::log1p(cv * cv);
    return std::exp(-0.5 * var + std::sqrt(var) * normal());
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

struct PreparedStage {
  StageId id = 0;
  StageWork work;
  std::vector<StageId> producers;
  bool terminal = false;
};

inline std::vector<PreparedStage> prepare(const LogicalPlan& plan, const PlanConfigs& configs,
                                          const CalibrationProfile& prof) {
  prof.require_operators(plan);
  for (const auto& s : plan.stages()) {
    if (!configs.count(s.id))
      throw ConfigError("stage " + std::to_string(s.id) + ": not configured");
    check_stage_config(plan, s.id, configs, prof);
  }
  std::vector<PreparedStage> out;
  for (StageId id : plan.topological_stage_order()) {
    const auto& cfg = configs.at(id);
    const auto bindings = producer_bindings(plan, id, configs, prof);
    out.push_back({id,
                   stage_work(plan.stage(id), cfg.workers, cfg.cores, prof.storage(cfg.storage),
                              bindings, prof),
                   plan.stage(id).producers, plan.is_terminal(id)});
  }
  return out;
}

inline RunRecord simulate_run(const std::vector<PreparedStage>& stages, std::size_t n_stages,
                              const CalibrationProfile& prof, const SimulationConfig& sim,
                              SimRng& rng) {
  RunRecord rec;
  std::vector<double> finish(n_stages + 1, 0.0);
  double cost = 0.0;
  double latency = 0.0;
  std::vector<TermScale> scales;
  std::vector<double> cold;
  std::vector<double> billed;
  for (const auto& ps : stages) {
    const auto& w = ps.work;
    const auto n_workers = static_cast<std::size_t>(w.workers);
    scales.resize(n_workers);
    cold.resize(n_workers);
    for (std::size_t k = 0; k < n_workers; ++k) {
      const bool is_cold = rng.bernoulli(w.cold_prob);
      rec.cold_start_count += is_cold ? 1 : 0;
      cold[k] = is_cold ? w.cold_delay_s : 0.0;
      auto& sc = scales[k];
      sc.fetch = rng.lognormal_unit_mean(sim.jitter_cv);
      sc.decompress = rng.lognormal_unit_mean(sim.jitter_cv);
      sc.process_op = rng.lognormal_unit_mean(sim.jitter_cv);
      sc.compress = rng.lognormal_unit_mean(sim.jitter_cv);
      sc.store = rng.lognormal_unit_mean(sim.jitter_cv);
    }

    auto read_latency = [&](const std::vector<double>& rps) {
      double lat = 0.0;
      for (auto i : w.read_services)
        lat = std::max(lat, storage_latency(rps[i], *w.loads[i].service));
      return lat;
    };
    auto slowest = [&](double lat_read, double lat_write) {
      double t = 0.0;
      for (std::size_t k = 0; k < n_workers; ++k)
        t = std::max(t, compose_worker_time(w, lat_read, lat_write, cold[k], cold[k], scales[k])
                            .t_worker_s);
      return t;
    };

    // First pass without throttling sets the request rate.
    const std::vector<double> idle(w.loads.size(), 0.0);
    const double first_pass =
        slowest(read_latency(idle), storage_latency(0.0, *w.loads[w.write_service].service));
    auto rps = request_rates(w, first_pass);
    for (std::size_t i = 0; i < rps.size(); ++i) {
      rps[i] = rps[i] * rng.lognormal_unit_mean(sim.throttle_noise_cv);
      if (rps[i] > w.loads[i].service->throttle_threshold_rps)
        rec.throttled_request_count += static_cast<std::uint64_t>(w.loads[i].requests);
    }
    const double lat_read = read_latency(rps);
    const double lat_write = storage_latency(rps[w.write_service], *w.loads[w.write_service].service);

    double stage_latency = 0.0;
    billed.resize(n_workers);
    for (std::size_t k = 0; k < n_workers; ++k) {
      const auto t = compose_worker_time(w, lat_read, lat_write, cold[k], cold[k], scales[k]);
      stage_latency = std::max(stage_latency, t.t_worker_s);
      billed[k] = t.billed_worker_s;
    }
    std::sort(billed.begin(), billed.end());
    std::vector<BilledGroup> groups;
    for (double d : billed) {
      if (!groups.empty() && groups.back().duration_s == d)
        groups.back().count += 1.0;
      else
        groups.push_back({d, 1.0});
    }
    cost = cost + stage_money(w, groups, prof.pricing).c_stage;

    double start = 0.0;
    for (StageId p : ps.producers) start = std::max(start, finish[p]);
    finish[ps.id] = start + stage_latency;
    if (ps.terminal) latency = std::max(latency, finish[ps.id]);
  }
  rec.latency_s = latency;
  rec.cost = cost;
  return rec;
}

}  // namespace detail

inline SimulationResult simulate_plan(const LogicalPlan& plan, const PlanConfigs& configs,
                                      const CalibrationProfile& prof,
                                      const SimulationConfig& sim) {
  if (sim.runs < 1) throw ValidationError("simulation needs at least one run");
  if (!(sim.jitter_cv >= 0.0) || !(sim.throttle_noise_cv >= 0.0))
    throw ValidationError("noise coefficients must be >= 0");
  const auto stages = detail::prepare(plan, configs, prof);
  SimulationResult out;
  out.seed_echo = sim.seed;
  out.config = sim;
  out.per_run.reserve(sim.runs);
  for (std::size_t r = 0; r < sim.runs; ++r) {
    detail::SimRng rng(detail::splitmix64(sim.seed ^ detail::splitmix64(r)));
    out.per_run.push_back(detail::simulate_run(stages, plan.size(), prof, sim, rng));
  }
  std::vector<double> lat, cost;
  for (const auto& r : out.per_run) {
    lat.push_back(r.latency_s);
    cost.push_back(r.cost);
  }
  out.latency_stats = summarize(lat);
  out.cost_stats = summarize(cost);
  return out;
}

struct ValidationReport {
  double predicted_latency_s = 0;
  double predicted_cost = 0;
  double latency_rel_error = 0;
  double cost_rel_error = 0;
  bool latency_within_p5_p95 = false;
  bool cost_within_p5_p95 = false;
  SimulationResult simulation;
};

inline double relative_error(double predicted, double observed) {
  if (observed == 0.0) return predicted == 0.0 ? 0.0 : INFINITY;
  return std::abs(predicted - observed) / std::abs(observed);
}

inline ValidationReport compare_prediction(const LogicalPlan& plan, const PlanConfigs& configs,
                                           const CalibrationProfile& prof,
                                           const SimulationConfig& sim) {
  ValidationReport rep;
  const auto pred = predict_plan(plan, configs, prof);
  rep.predicted_latency_s = pred.total_latency_s;
  rep.predicted_cost = pred.total_cost;
  rep.simulation = simulate_plan(plan, configs, prof, sim);
  const auto& ls = rep.simulation.latency_stats;
  const auto& cs = rep.simulation.cost_stats;
  rep.latency_rel_error = relative_error(pred.total_latency_s, ls.mean);
  rep.cost_rel_error = relative_error(pred.total_cost, cs.mean);
  rep.latency_within_p5_p95 = ls.p5 <= pred.total_latency_s && pred.total_latency_s <= ls.p95;
  rep.cost_within_p5_p95 = cs.p5 <= pred.total_cost && pred.total_cost <= cs.p95;
  return rep;
}

}  // namespace faasplan
