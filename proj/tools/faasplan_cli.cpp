// faasplan: plan, select, simulate and serve serverless query configurations.
//
// Exit codes: 0 ok, 1 validation, 2 I/O, 3 infeasible budget, 64 usage.
// ODYSSEY_LOG sets log verbosity (trace, debug, info, warn, error, off).

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <pthread.h>
#include <chrono>
#include <thread>

#include "CLI11.hpp"
#include "httplib.h"
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "faasplan/artifacts.hpp"
#include "faasplan/calibration.hpp"
#include "faasplan/search.hpp"
#include "faasplan/service.hpp"
#include "faasplan/simulator.hpp"

namespace {

using namespace faasplan;

constexpr int kExitUsage = 64;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("faasplan");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("ODYSSEY_LOG")) {
    auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real names.
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
    else
      spdlog::warn("ODYSSEY_LOG='{}' is not a log level; using info", env);
  }
}

struct PlanArgs {
  std::string plan, profile, out;
  std::size_t local_space_cap = SearchOptions{}.local_space_cap;
};

int cmd_plan(const PlanArgs& a) {
  const auto plan = load_logical_plan(a.plan);
  const auto prof = load_profile(a.profile);
  for (const auto& f : prof.defaulted) spdlog::debug("profile default applied: {}", f);
  SearchOptions opts;
  opts.local_space_cap = a.local_space_cap;
  const auto t0 = std::chrono::steady_clock::now();
  auto res = incremental_pareto_search(plan, prof, opts);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  FrontierDocument doc{make_manifest("plan", a.plan, a.profile,
                                     {{"local_space_cap", a.local_space_cap}}),
                       plan, prof.name, std::move(res.frontier), std::move(res.stats), wall};
  write_text_file(a.out, dump_document(to_json(doc)));
  const auto& f = doc.frontier;
  std::cout << "frontier: " << f.points.size() << " points, knee index " << f.knee_index << "\n";
  std::cout << "planning wall time: " << wall << " s\n";
  std::cout << "pruned space per stage:";
  for (auto s : doc.stats.pruned_space_sizes) std::cout << ' ' << s;
  std::cout << "\nexhaustive space: " << doc.stats.exhaustive_space_size << "\n";
  spdlog::info("wrote {}", a.out);
  return 0;
}

struct SelectArgs {
  std::string frontier, preference = "knee", out;
};

int cmd_select(const SelectArgs& a) {
  const auto doc = parse_frontier(read_text_file(a.frontier));
  const auto pref = parse_preference(a.preference);
  try {
    const auto idx = select_index(objectives(doc.frontier.points), pref, doc.frontier.knee_index);
    SelectedPlanDocument out{
        make_manifest("select", doc.manifest.plan_path, doc.manifest.profile_path,
                      {{"frontier", a.frontier}, {"preference", pref.to_string()}}),
        doc.plan, pref.to_string(), idx, doc.frontier.points[idx]};
    write_text_file(a.out, dump_document(to_json(out)));
    const auto& p = doc.frontier.points[idx];
    std::cout << "preference " << pref.to_string() << ": point " << idx << " (cost "
              << p.predicted_cost << ", latency " << p.predicted_latency_s << " s)\n";
    spdlog::info("wrote {}", a.out);
    return 0;
  } catch (const BudgetInfeasibleError& e) {
    const auto& p = doc.frontier.points[e.nearest_index()];
    std::cerr << "infeasible: " << e.what() << "\nnearest point " << e.nearest_index()
              << ": cost " << p.predicted_cost << ", latency " << p.predicted_latency_s << " s\n";
    return e.exit_code();
  }
}

struct SimulateArgs {
  std::string plan, profile, out;
  std::uint64_t seed = 0;
  std::size_t runs = 100;
  double jitter_cv = SimulationConfig{}.jitter_cv;
  double throttle_noise_cv = SimulationConfig{}.throttle_noise_cv;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto sel = parse_selected_plan(read_text_file(a.plan));
  const auto prof = load_profile(a.profile);
  SimulationConfig sim{a.seed, a.runs, a.jitter_cv, a.throttle_noise_cv};
  SimulationReportDocument out{
      make_manifest("simulate", a.plan, a.profile,
                    {{"seed", a.seed},
                     {"runs", a.runs},
                     {"jitter_cv", a.jitter_cv},
                     {"throttle_noise_cv", a.throttle_noise_cv}}),
      sel.index, compare_prediction(sel.plan, sel.candidate.stage_configs, prof, sim)};
  write_text_file(a.out, dump_document(to_json(out)));
  const auto& r = out.report;
  const auto& ls = r.simulation.latency_stats;
  const auto& cs = r.simulation.cost_stats;
  std::cout << "latency: predicted " << r.predicted_latency_s << " s, simulated mean " << ls.mean
            << " [p5 " << ls.p5 << ", p95 " << ls.p95 << "], rel error " << r.latency_rel_error
            << "\n";
  std::cout << "cost: predicted " << r.predicted_cost << ", simulated mean " << cs.mean << " [p5 "
            << cs.p5 << ", p95 " << cs.p95 << "], rel error " << r.cost_rel_error << "\n";
  spdlog::info("wrote {}", a.out);
  return 0;
}

struct ServeArgs {
  std::string frontier, profile, host = "127.0.0.1", static_dir;
  int port = 8080;
};

void reply(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body, r.content_type);
}

int cmd_serve(const ServeArgs& a) {
  // Block termination signals before any thread starts; a dedicated
  // thread waits for them and stops the server.
  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  const FrontierService service(read_text_file(a.frontier), load_profile(a.profile), a.frontier,
                                a.profile);
  httplib::Server svr;
  svr.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  svr.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  svr.Get("/frontier", [&](const httplib::Request&, httplib::Response& res) {
    reply(res, service.get_frontier());
  });
  svr.Get(R"(/plan/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_plan(req.matches[1].str()));
  });
  svr.Post("/select", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_select(req.body));
  });
  svr.Post("/simulate", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.post_simulate(req.body));
  });
  if (!a.static_dir.empty() && !svr.set_mount_point("/", a.static_dir))
    throw IoError("cannot serve static files from '" + a.static_dir + "'");
  svr.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::debug("{} {} -> {}", req.method, req.path, res.status);
  });

  // Port 0 asks the OS for a free port; the chosen one is printed.
  const int port = a.port == 0 ? svr.bind_to_any_port(a.host)
                               : (svr.bind_to_port(a.host, a.port) ? a.port : -1);
  if (port <= 0) throw IoError("cannot listen on " + a.host + ":" + std::to_string(a.port));
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&sigs, &sig);
    spdlog::info("signal {} received, shutting down", sig);
    svr.stop();
  });
  spdlog::info("serving {}", a.frontier);
  std::cout << "listening on http://" << a.host << ":" << port << std::endl;
  const bool ok = svr.listen_after_bind();
  if (!ok) {
    // Server stopped without a signal: release the waiter.
    pthread_kill(waiter.native_handle(), SIGTERM);
  }
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Cost/latency planner for serverless query plans"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(faasplan::kToolVersion));

  PlanArgs pa;
  auto* plan = app.add_subcommand("plan", "Compute the Pareto frontier of a logical plan");
  plan->add_option("--plan", pa.plan, "Logical plan file")->required();
  plan->add_option("--profile", pa.profile, "Calibration profile file")->required();
  plan->add_option("--out", pa.out, "Frontier file to write")->required();
  plan->add_option("--local-space-cap", pa.local_space_cap,
                   "Abort when one (workers, storage) group exceeds this many partial plans")
      ->check(CLI::PositiveNumber);

  SelectArgs sa;
  auto* select = app.add_subcommand("select", "Pick one frontier point by preference");
  select->add_option("--frontier", sa.frontier, "Frontier file")->required();
  select->add_option("--preference", sa.preference,
                     "knee | fastest | cheapest | cost-budget=<x> | latency-budget=<s>")
      ->capture_default_str();
  select->add_option("--out", sa.out, "Selected-plan file to write")->required();

  SimulateArgs ma;
  auto* simulate = app.add_subcommand("simulate", "Simulate a selected plan and compare");
  simulate->add_option("--plan", ma.plan, "Selected-plan file")->required();
  simulate->add_option("--profile", ma.profile, "Calibration profile file")->required();
  simulate->add_option("--seed", ma.seed, "Random seed")->capture_default_str();
  simulate->add_option("--runs", ma.runs, "Number of simulated runs")
      ->check(CLI::Range(std::size_t{1}, FrontierService::kMaxRuns))
      ->capture_default_str();
  simulate->add_option("--jitter-cv", ma.jitter_cv, "Transfer/compute noise (CV)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--throttle-noise-cv", ma.throttle_noise_cv, "Request-rate noise (CV)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--out", ma.out, "Simulation report file to write")->required();

  ServeArgs va;
  auto* serve = app.add_subcommand("serve", "Serve a frontier over HTTP on loopback");
  serve->add_option("--frontier", va.frontier, "Frontier file")->required();
  serve->add_option("--profile", va.profile, "Calibration profile file")->required();
  serve->add_option("--port", va.port, "TCP port")->check(CLI::Range(0, 65535))->capture_default_str();
  serve->add_option("--host", va.host, "Bind address")->capture_default_str();
  serve->add_option("--static-dir", va.static_dir, "Directory of UI assets to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (plan->parsed()) return cmd_plan(pa);
    if (select->parsed()) return cmd_select(sa);
    if (simulate->parsed()) return cmd_simulate(ma);
    if (serve->parsed()) return cmd_serve(va);
  } catch (const faasplan::Error& e) {
    spdlog::error("{}", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
  return kExitUsage;
}
