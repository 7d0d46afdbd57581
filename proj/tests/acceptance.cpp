// Acceptance checks A1-A7. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "faasplan/config_space.hpp"
#include "faasplan/search.hpp"
#include "faasplan/simulator.hpp"
#include "test_support.hpp"

using namespace faasplan;
using faasplan::testing::data_path;
using faasplan::testing::kGiB;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Collects individual failures with a short description each.
struct Checks {
  std::vector<std::string> failures;
  int count = 0;
  void expect(bool ok, const std::string& what) {
    ++count;
    if (!ok) failures.push_back(what);
  }
  void rel(double got, double want, const std::string& what, double tol = 1e-9) {
    const double err = want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
    std::ostringstream os;
    os.precision(17);
    os << what << ": got " << got << " want " << want;
    expect(err <= tol, os.str());
  }
  std::string summary() const {
    std::string s = std::to_string(count - failures.size()) + "/" + std::to_string(count) + " checks";
    for (const auto& f : failures) s += "; " + f;
    return s;
  }
};

std::vector<std::pair<double, double>> point_set(const ParetoFrontier& f) {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : f.points) out.push_back({p.predicted_cost, p.predicted_latency_s});
  return out;
}

Outcome a1_frontier_matches_exhaustive() {
  auto prof = faasplan::testing::two_storage_profile();
  prof.platform.worker_mem_max_mb = 3540;
  prof.platform.min_input_per_worker_mb = 128;
  prof.validate();
  std::mt19937_64 rng(2024);
  const auto t0 = Clock::now();
  int compared = 0, mismatched = 0, skipped = 0;
  double largest = 0;
  while (compared < 30) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const auto plan = faasplan::testing::random_plan(rng, n, 40 * kGiB);
    SearchResult ex;
    try {
      ex = exhaustive_search(plan, prof, 1e6);
    } catch (const SpaceTooLargeError&) {
      ++skipped;
      continue;
    }
    const auto inc = incremental_pareto_search(plan, prof);
    largest = std::max(largest, ex.stats.exhaustive_space_size);
    ++compared;
    if (point_set(inc.frontier) != point_set(ex.frontier)) ++mismatched;
  }
  const double wall = seconds_since(t0);
  std::ostringstream os;
  os << compared << " plans, " << mismatched << " mismatched, largest |space| " << largest
     << ", " << skipped << " drawn over the 1e6 cap, " << wall << " s";
  return {mismatched == 0 && wall < 120.0, os.str()};
}

// Scan of 64 GiB to 16 GiB, then joins keeping 1/8 of their input.
LogicalPlan selective_chain(int n) {
  std::vector<LogicalStage> st;
  st.push_back({1, OperatorKind::Scan, {}, 64 * kGiB, 16 * kGiB, std::nullopt});
  for (int i = 2; i <= n; ++i) {
    const auto in = st.back().output_bytes;
    st.push_back({static_cast<StageId>(i), OperatorKind::Join, {static_cast<StageId>(i - 1)}, in,
                  in / 8, std::nullopt});
  }
  return LogicalPlan("chain" + std::to_string(n), std::move(st));
}

Outcome a2_pruned_space_bounded() {
  const auto prof = load_profile(data_path("reference_profile.json"));
  const auto t0 = Clock::now();
  Checks c;
  double prev_space = 0;
  std::size_t lo = SIZE_MAX, hi = 0;
  std::ostringstream sizes;
  for (int n = 2; n <= 12; ++n) {
    const auto res = incremental_pareto_search(selective_chain(n), prof);
    const double space = res.stats.exhaustive_space_size;
    if (n > 2)
      c.expect(space >= 10.0 * prev_space,
               "growth " + std::to_string(n - 1) + "->" + std::to_string(n) + " below 10x");
    prev_space = space;
    std::size_t mx = 0;
    for (auto s : res.stats.pruned_space_sizes) mx = std::max(mx, s);
    sizes << (n > 2 ? " " : "") << mx;
    if (n >= 6) {
      lo = std::min(lo, mx);
      hi = std::max(hi, mx);
    }
  }
  const double ratio = static_cast<double>(hi) / static_cast<double>(lo);
  c.expect(ratio < 2.0, "max pruned size varies " + std::to_string(ratio) + "x over 6-12 stages");
  const double wall = seconds_since(t0);
  c.expect(wall < 60.0, "runtime " + std::to_string(wall) + " s");
  std::ostringstream os;
  os << "max pruned per plan (2..12 stages):" << sizes.str() << "; ratio over 6-12 " << ratio
     << "; " << c.summary();
  return {c.failures.empty(), os.str()};
}

Outcome a3_planning_latency() {
  const auto plan = load_logical_plan(data_path("chain_10stage_5join.json"));
  const auto prof = load_profile(data_path("reference_profile.json"));
  std::size_t joins = 0;
  for (const auto& s : plan.stages()) joins += s.op == OperatorKind::Join;
  const auto t0 = Clock::now();
  const auto res = incremental_pareto_search(plan, prof);
  const double wall = seconds_since(t0);
  std::ostringstream os;
  os << plan.size() << " stages (" << joins << " joins), " << res.frontier.points.size()
     << " frontier points, " << wall << " s (" << (wall < 1.0 ? "under" : "over")
     << " the 1 s target, hard cap 2 s)";
  return {plan.size() == 10 && joins == 5 && wall < 2.0, os.str()};
}

Outcome a4_equation_suite() {
  Checks c;
  const auto unit = faasplan::testing::unit_profile();
  const auto& p = unit.platform;
  const auto& s3 = unit.storage("S3Standard");
  c.rel(client_inv_delay(1000, p), 1.0, "client delay W=1000");
  c.rel(client_inv_delay(500, p), 0.5, "client delay W=500");
  c.rel(provider_inv_delay(1500, p), 5.040, "provider delay W=1500");
  c.rel(fetch_time(150, s3, p, 0), 0.55, "fetch 150 MB");
  c.rel(fetch_time(300, s3, p, 0), 0.05 + 0.5 + 150.0 / 70.0, "fetch 300 MB");
  c.rel(storage_latency(11000, s3), 0.05 + 0.65 * std::exp(0.66), "throttled latency rps=11000");
  c.rel(storage_latency(11000, s3) - 0.05, 1.2576, "throttle term ~1.2576", 1e-4);
  const OperatorProfile op{OperatorKind::Join, 175, 350, 300, 1.0};
  const auto pt = process_time(700, op, 2);
  c.rel(pt.t_decompress_s, 1.0, "decompress 700 MB on 2 cores");
  c.rel(pt.t_process_op_s, 2.0, "process 700 MB on 2 cores");
  const auto ot = output_time(150, op, s3, p, 1, 0);
  c.rel(ot.t_compress_s, 0.5, "compress 150 MB");
  c.rel(ot.t_store_s, 0.55, "store 150 MB");
  c.rel(cold_start_penalty(500, p), (1.0 - std::pow(0.9, 500)) * 1.0, "penalty W=500 p=0.1");
  c.rel(cold_start_penalty(500, p), p.cold_start_delay_ms / 1000.0, "penalty ~ delay");
  const BilledGroup g{10.0, 2};
  const double money = worker_money(std::span(&g, 1), 2048.0, PricingProfile{2e-7, 1.6667e-5});
  c.rel(money, 2 * (2e-7 + 1.6667e-5 * 10 * 2), "worker money W=2 10 s 2 GB");
  c.rel(money, 6.671e-4, "worker money ~6.671e-4", 1e-4);
  c.expect(worker_bounds(10 * kGiB, kGiB, kGiB / 10) == WorkerBounds{10, 100}, "H1 (10, 100)");
  c.expect(worker_sizes_h3(unit) == std::vector<std::uint32_t>{1, 2, 3, 4, 5}, "H3 cores 1..5");
  c.expect(filter_alignment_h4(10, 2, 40), "H4 w=10 c=2 p=40");
  c.expect(!filter_alignment_h4(10, 3, 40), "H4 w=10 c=3 p=40");
  c.expect(knee_point({{1, 10}, {2, 3}, {10, 2.5}}) == 1, "knee index 1");

  const auto ref = load_profile(data_path("reference_profile.json"));
  const auto& rp = ref.platform;
  c.expect(rp.provider_base_delay_ms == 40.0, "provider base 40 ms");
  c.expect(rp.provider_concurrency_limit == 1000.0, "concurrency limit 1000");
  c.expect(rp.provider_over_limit_delay_ms_per_worker == 10.0, "over-limit 10 ms");
  c.expect(rp.mem_per_core_mb == 1770.0, "1770 MB per core");
  c.expect(rp.fetch_fast_bw_mbps == 300.0, "300 MB/s");
  c.expect(rp.fetch_fast_window_mb == 150.0, "150 MB window");
  c.expect(rp.fetch_slow_bw_mbps == 70.0, "70 MB/s");
  const auto& rs = ref.storage("S3Standard");
  c.expect(rs.throttle_threshold_rps == 5500.0, "threshold 5500");
  c.expect(rs.throttle_a == 0.65, "a 0.65");
  c.expect(rs.throttle_b == 0.66, "b 0.66");
  return {c.failures.empty(), c.summary()};
}

Outcome a5_prediction_within_simulation() {
  const auto plan = load_logical_plan(data_path("example_3stage.json"));
  auto prof = load_profile(data_path("reference_profile.json"));
  const auto t0 = Clock::now();
  const auto f = incremental_pareto_search(plan, prof).frontier;
  const auto& knee = f.points[f.knee_index];
  Checks c;
  SimulationConfig noisy;
  noisy.seed = 0;
  noisy.runs = 200;
  const auto rep = compare_prediction(plan, knee.stage_configs, prof, noisy);
  const auto& ls = rep.simulation.latency_stats;
  const auto& cs = rep.simulation.cost_stats;
  c.expect(rep.latency_within_p5_p95, "latency outside [p5, p95]");
  c.expect(rep.cost_within_p5_p95, "cost outside [p5, p95]");

  // Zero noise: no jitter, no rate noise, no cold-start draws.
  prof.platform.cold_start_prob_small = 0.0;
  prof.platform.cold_start_prob_large = 0.0;
  const auto quiet =
      compare_prediction(plan, knee.stage_configs, prof, SimulationConfig{0, 200, 0.0, 0.0});
  bool exact = true;
  for (const auto& r : quiet.simulation.per_run)
    exact = exact && r.latency_s == quiet.predicted_latency_s && r.cost == quiet.predicted_cost;
  c.expect(exact, "zero-noise runs differ from prediction");
  const double wall = seconds_since(t0);
  c.expect(wall < 30.0, "runtime " + std::to_string(wall) + " s");
  std::ostringstream os;
  os << "knee " << f.knee_index << ": latency " << knee.predicted_latency_s << " in [" << ls.p5
     << ", " << ls.p95 << "], cost " << knee.predicted_cost << " in [" << cs.p5 << ", " << cs.p95
     << "]; zero noise exact: " << (exact ? "yes" : "no") << "; " << c.summary();
  return {c.failures.empty(), os.str()};
}

Outcome a6_variability_ablation() {
  const auto plan = load_logical_plan(data_path("adversarial_plan.json"));
  const auto full = load_profile(data_path("adversarial_profile.json"));
  auto blind = full;
  blind.platform.cold_start_prob_small = 0.0;
  blind.platform.cold_start_prob_large = 0.0;
  for (auto& [id, s] : blind.storages) s.throttle_a = 0.0;
  const auto t0 = Clock::now();
  const auto pref = parse_preference("knee");
  const auto ff = incremental_pareto_search(plan, full).frontier;
  const auto bf = incremental_pareto_search(plan, blind).frontier;
  const auto& fp = select_plan(ff, pref);
  const auto& bp = select_plan(bf, pref);

  Checks c;
  // The scenario must be adversarial for the blind plan: wide and throttled.
  const auto under_full = predict_plan(plan, bp.stage_configs, full);
  std::uint32_t max_w = 0;
  double max_rps = 0, threshold = 0;
  for (const auto& sp : under_full.per_stage) {
    max_w = std::max(max_w, sp.config.workers);
    if (sp.time.request_rate_rps > max_rps) {
      max_rps = sp.time.request_rate_rps;
      threshold = full.storage(sp.config.storage).throttle_threshold_rps;
    }
  }
  c.expect(max_w >= 500, "blind plan has no stage with W >= 500");
  c.expect(max_rps > threshold, "blind plan stays under the throttle threshold");

  SimulationConfig sim;
  sim.seed = 0;
  sim.runs = 200;
  const auto fs = simulate_plan(plan, fp.stage_configs, full, sim);
  const auto bs = simulate_plan(plan, bp.stage_configs, full, sim);
  const double fe = relative_error(fp.predicted_latency_s, fs.latency_stats.mean);
  const double be = relative_error(bp.predicted_latency_s, bs.latency_stats.mean);
  c.expect(bs.cost_stats.mean >= fs.cost_stats.mean, "blind plan is cheaper when simulated");
  c.expect(be >= 2.0 * fe, "blind latency error not 2x the full model's");
  const double wall = seconds_since(t0);
  c.expect(wall < 60.0, "runtime " + std::to_string(wall) + " s");
  std::ostringstream os;
  os << "blind plan max W " << max_w << ", peak rps " << max_rps << " (threshold " << threshold
     << "); simulated mean cost full " << fs.cost_stats.mean << " vs blind " << bs.cost_stats.mean
     << "; latency error full " << fe << " vs blind " << be << " (" << be / fe << "x); "
     << c.summary();
  return {c.failures.empty(), os.str()};
}

Outcome a7_property_suites() {
  const std::vector<std::pair<std::string, std::string>> suites = {
      {"pareto", FAASPLAN_PARETO_TEST},         {"config_space", FAASPLAN_CONFIG_SPACE_TEST},
      {"cost_model", FAASPLAN_COST_MODEL_TEST}, {"search", FAASPLAN_SEARCH_TEST},
      {"plan_model", FAASPLAN_PLAN_MODEL_TEST}, {"artifacts", FAASPLAN_ARTIFACTS_TEST},
      {"simulator", FAASPLAN_SIMULATOR_TEST}};
  std::string detail;
  bool ok = true;
  for (const auto& [name, exe] : suites) {
    const std::string cmd = "'" + exe + "' --gtest_brief=1 >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const bool pass = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    ok = ok && pass;
    detail += (detail.empty() ? "" : ", ") + name + (pass ? " ok" : " FAILED");
  }
  return {ok, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"A1 frontier equals exhaustive search", a1_frontier_matches_exhaustive},
      {"A2 pruned space stays bounded", a2_pruned_space_bounded},
      {"A3 10-stage planning latency", a3_planning_latency},
      {"A4 cost-model equation suite", a4_equation_suite},
      {"A5 prediction within simulated p5-p95", a5_prediction_within_simulation},
      {"A6 variability-blind plan is worse", a6_variability_ablation},
      {"A7 property suites", a7_property_suites}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
