#pragma once

// Analytic time and money model for serverless query stages.
//
// A stage runs `workers` homogeneous workers. Each worker:
//   t_worker = t_inv + max(t_fetch, t_process) + t_output + cold-start penalty
//   t_fetch  = Lat_storage(rps) + piecewise transfer (fast window, then slow)
//   t_process = t_decompress + t_process_op
//   t_output  = t_compress + t_store      (t_store is t_fetch on the output)
// and is billed `invocation + gb_second * duration * memory_gb`. Storage is
// billed per request plus per stored GB written.
//
// Every stage sees a synchronous barrier: it starts once all producers have
// finished. Plan latency is the latest terminal finish; plan cost is the sum
// of stage costs in topological order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "faasplan/calibration.hpp"
#include "faasplan/error.hpp"
#include "faasplan/plan_model.hpp"

namespace faasplan {

struct StageConfig {
  std::uint32_t workers = 1;
  std::uint32_t cores = 1;
  double memory_mb = 0.0;
  std::uint32_t partitions = 0;  // 0 while the consumer is unconfigured
  std::string storage;

  bool operator==(const StageConfig&) const = default;
  auto operator<=>(const StageConfig&) const = default;
};

inline StageConfig make_stage_config(std::uint32_t workers, std::uint32_t cores,
                                     std::string storage, const CalibrationProfile& prof,
                                     std::uint32_t partitions = 0) {
  return {workers, cores, cores * prof.platform.mem_per_core_mb, partitions, std::move(storage)};
}

struct TimeBreakdown {
  double t_inv_s = 0, t_fetch_s = 0, t_process_s = 0, t_decompress_s = 0, t_process_op_s = 0,
         t_fetch_process_s = 0, t_compress_s = 0, t_store_s = 0, t_output_s = 0, t_worker_s = 0;
  double cold_start_penalty_s = 0;
  // Storage latency seen by reads (max over input services) and by writes.
  double lat_storage_s = 0;
  double lat_storage_write_s = 0;
  // Expected duration each worker is billed for: every worker pays only for
  // its own cold start, with probability p.
  double billed_worker_s = 0;
  double request_rate_rps = 0;

  bool operator==(const TimeBreakdown&) const = default;
};

struct CostBreakdown {
  double c_workers = 0;
  double c_storage = 0;
  double c_stage = 0;
  std::uint64_t n_read_requests = 0;
  std::uint64_t n_write_requests = 0;
  double d_output_gb = 0;

  bool operator==(const CostBreakdown&) const = default;
};

// ---------------------------------------------------------------------------
// Primitive terms

inline double client_inv_delay(double workers, const PlatformProfile& p) {
  return workers / p.client_inv_rate;
}

inline double provider_inv_delay(double workers, const PlatformProfile& p) {
  const double over = std::max(0.0, workers - p.provider_concurrency_limit);
  return (p.provider_base_delay_ms + over * p.provider_over_limit_delay_ms_per_worker) / 1000.0;
}

inline double invocation_time(double workers, const PlatformProfile& p) {
  return client_inv_delay(workers, p) + provider_inv_delay(workers, p);
}

// Bandwidth part of a fetch or store of `d_mb` megabytes.
inline double transfer_time(double d_mb, const PlatformProfile& p) {
  if (d_mb > p.fetch_fast_window_mb)
    return p.fetch_fast_window_mb / p.fetch_fast_bw_mbps +
           (d_mb - p.fetch_fast_window_mb) / p.fetch_slow_bw_mbps;
  return d_mb / p.fetch_fast_bw_mbps;
}

// Extra latency once the request rate strictly exceeds the service threshold.
inline double throttled_latency(double total_req_per_sec, const StorageServiceProfile& s) {
  if (total_req_per_sec > s.throttle_threshold_rps)
    return s.throttle_a * std::exp(s.throttle_b * (total_req_per_sec / s.throttle_threshold_rps - 1.0));
  return 0.0;
}

inline double storage_latency(double total_req_per_sec, const StorageServiceProfile& s) {
  return s.base_latency_s + throttled_latency(total_req_per_sec, s);
}

inline double fetch_time(double d_input_mb, const StorageServiceProfile& s,
                         const PlatformProfile& p, double request_rate_rps) {
  return storage_latency(request_rate_rps, s) + transfer_time(d_input_mb, p);
}

struct ProcessTime {
  double t_decompress_s;
  double t_process_op_s;
};

inline ProcessTime process_time(double d_input_mb, const OperatorProfile& op, double cores) {
  return {d_input_mb / (op.decompress_mb_per_core_s * cores),
          d_input_mb / (op.throughput_mb_per_core_s * cores)};
}

struct OutputTime {
  double t_compress_s;
  double t_store_s;
};

inline OutputTime output_time(double d_output_mb, const OperatorProfile& op,
                              const StorageServiceProfile& s, const PlatformProfile& p,
                              double cores, double request_rate_rps) {
  return {d_output_mb / (op.compress_mb_per_core_s * cores),
          fetch_time(d_output_mb, s, p, request_rate_rps)};
}

// Expected delay of the slowest worker when each of `workers` cold-starts
// independently: P(at least one cold) * delay.
inline double cold_start_penalty(double workers, const PlatformProfile& p) {
  const double prob = p.cold_start_probability(workers);
  return (1.0 - std::pow(1.0 - prob, workers)) * (p.cold_start_delay_ms / 1000.0);
}

// Worker money for groups of workers sharing one billed duration:
// sum over groups of count * (invocation + gb_second * duration * memory_gb).
struct BilledGroup {
  double duration_s;
  double count;
};

inline double worker_money(std::span<const BilledGroup> groups, double memory_mb,
                           const PricingProfile& pricing) {
  const double mem_gb = memory_mb / kMbPerGb;
  double total = 0.0;
  for (const auto& g : groups)
    total += g.count * (pricing.worker_invocation_price +
                        pricing.worker_gb_second_price * g.duration_s * mem_gb);
  return total;
}

// ---------------------------------------------------------------------------
// Stage I/O: who the stage reads from, how much, and with how many requests.

struct ProducerBinding {
  StageId id = 0;
  std::uint32_t workers = 1;
  const StorageServiceProfile* storage = nullptr;
  // Bytes the producer left in storage (logical output * compression ratio).
  double stored_bytes = 0;
};

struct ServiceLoad {
  const StorageServiceProfile* service = nullptr;
  double requests = 0;
};

// Per-worker multiplicative noise on the transfer and compute terms. The
// deterministic model uses all ones.
struct TermScale {
  double fetch = 1.0, decompress = 1.0, process_op = 1.0, compress = 1.0, store = 1.0;
};

// Everything about one stage configuration that does not depend on storage
// latency; `compose_worker_time` turns it into a TimeBreakdown.
struct StageWork {
  double workers = 1, cores = 1, memory_mb = 0;
  double t_inv_s = 0;
  double read_transfer_s = 0;
  double t_decompress_s = 0, t_process_op_s = 0, t_compress_s = 0;
  double write_transfer_s = 0;
  double cold_prob = 0, cold_delay_s = 0;
  // Deduplicated services touched by the stage, with their request totals.
  std::vector<ServiceLoad> loads;
  std::vector<std::size_t> read_services;
  std::size_t write_service = 0;
  // Read requests per source (each producer, or the base table of a scan).
  std::vector<ServiceLoad> read_sources;
  std::uint64_t n_read = 0, n_write = 0;
  double d_output_gb = 0;
  std::uint64_t partitions_per_worker = 0;
};

inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

inline std::uint64_t scan_splits(std::uint64_t bytes, const PlatformProfile& p) {
  const double split_bytes = p.input_split_mb * kBytesPerMb;
  return std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::ceil(static_cast<double>(bytes) / split_bytes)));
}

// Input partitions a stage consumes in total. A scan consumes base-table
// splits. Any other stage reads, from the combined output file of every
// producer worker, the one partition addressed to each of its own workers.
inline std::uint64_t incoming_partitions(const LogicalStage& stage, std::uint32_t workers,
                                         std::span<const ProducerBinding> producers,
                                         const PlatformProfile& p) {
  if (stage.op == OperatorKind::Scan) return scan_splits(stage.input_bytes, p);
  std::uint64_t total = 0;
  for (const auto& pb : producers) total += std::uint64_t{pb.workers} * workers;
  return total;
}

inline StageWork stage_work(const LogicalStage& stage, std::uint32_t workers, std::uint32_t cores,
                            const StorageServiceProfile& out_storage,
                            std::span<const ProducerBinding> producers,
                            const CalibrationProfile& prof) {
  const auto& p = prof.platform;
  const auto& op = prof.op(stage.op);
  StageWork w;
  w.workers = workers;
  w.cores = cores;
  w.memory_mb = cores * p.mem_per_core_mb;

  const double in_mb = static_cast<double>(stage.input_bytes) / workers / kBytesPerMb;
  if (in_mb > w.memory_mb)
    throw ConfigError("stage " + std::to_string(stage.id) + ": per-worker input " +
                      std::to_string(in_mb) + " MB exceeds worker memory " +
                      std::to_string(w.memory_mb) + " MB");

  auto slot = [&](const StorageServiceProfile* s) {
    for (std::size_t i = 0; i < w.loads.size(); ++i)
      if (w.loads[i].service == s) return i;
    w.loads.push_back({s, 0.0});
    return w.loads.size() - 1;
  };
  auto add_read = [&](const StorageServiceProfile* s, std::uint64_t reqs) {
    auto i = slot(s);
    w.loads[i].requests += static_cast<double>(reqs);
    if (std::find(w.read_services.begin(), w.read_services.end(), i) == w.read_services.end())
      w.read_services.push_back(i);
    w.read_sources.push_back({s, static_cast<double>(reqs)});
    w.n_read += reqs;
  };

  w.partitions_per_worker = ceil_div(incoming_partitions(stage, workers, producers, p), workers);
  double fetched_bytes = 0.0;
  if (stage.op == OperatorKind::Scan) {
    fetched_bytes = static_cast<double>(stage.input_bytes);
    add_read(&prof.storage(prof.base_storage), std::uint64_t{workers} * w.partitions_per_worker);
  } else {
    for (const auto& pb : producers) {
      fetched_bytes += pb.stored_bytes;
      add_read(pb.storage, std::uint64_t{workers} * pb.workers);
    }
  }

  const double fetched_mb = fetched_bytes / workers / kBytesPerMb;
  const double out_mb = static_cast<double>(stage.output_bytes) / workers / kBytesPerMb;
  const double stored_out_mb = out_mb * op.compression_ratio;

  w.t_inv_s = invocation_time(workers, p);
  w.read_transfer_s = transfer_time(fetched_mb, p);
  w.t_decompress_s = process_time(fetched_mb, op, cores).t_decompress_s;
  w.t_process_op_s = process_time(in_mb, op, cores).t_process_op_s;
  w.t_compress_s = out_mb / (op.compress_mb_per_core_s * cores);
  w.write_transfer_s = transfer_time(stored_out_mb, p);
  w.cold_prob = p.cold_start_probability(workers);
  w.cold_delay_s = p.cold_start_delay_ms / 1000.0;

  w.write_service = slot(&out_storage);
  w.n_write = workers;
  w.loads[w.write_service].requests += static_cast<double>(w.n_write);
  w.d_output_gb = static_cast<double>(stage.output_bytes) * op.compression_ratio / kBytesPerGb;
  return w;
}

inline double straggler_penalty(const StageWork& w) {
  return (1.0 - std::pow(1.0 - w.cold_prob, w.workers)) * w.cold_delay_s;
}

// Composes the per-worker time terms for given storage latencies.
// `penalty` is added to t_worker, `billed_cold_s` to the billed duration.
inline TimeBreakdown compose_worker_time(const StageWork& w, double lat_read, double lat_write,
                                         double penalty, double billed_cold_s,
                                         const TermScale& scale = {}) {
  TimeBreakdown t;
  t.t_inv_s = w.t_inv_s;
  t.lat_storage_s = lat_read;
  t.lat_storage_write_s = lat_write;
  t.t_fetch_s = lat_read + w.read_transfer_s * scale.fetch;
  t.t_decompress_s = w.t_decompress_s * scale.decompress;
  t.t_process_op_s = w.t_process_op_s * scale.process_op;
  t.t_process_s = t.t_decompress_s + t.t_process_op_s;
  t.t_fetch_process_s = std::max(t.t_fetch_s, t.t_process_s);
  t.t_compress_s = w.t_compress_s * scale.compress;
  t.t_store_s = lat_write + w.write_transfer_s * scale.store;
  t.t_output_s = t.t_compress_s + t.t_store_s;
  t.cold_start_penalty_s = penalty;
  const double busy = t.t_inv_s + t.t_fetch_process_s + t.t_output_s;
  t.t_worker_s = busy + penalty;
  t.billed_worker_s = busy + billed_cold_s;
  return t;
}

// Deterministic worker time for given per-service request rates (aligned
// with `w.loads`).
inline TimeBreakdown worker_time(const StageWork& w, std::span<const double> service_rps) {
  double lat_read = 0.0;
  for (auto i : w.read_services)
    lat_read = std::max(lat_read, storage_latency(service_rps[i], *w.loads[i].service));
  const double lat_write =
      storage_latency(service_rps[w.write_service], *w.loads[w.write_service].service);
  return compose_worker_time(w, lat_read, lat_write, straggler_penalty(w),
                             w.cold_prob * w.cold_delay_s);
}

// Request rate per service when the stage runs for `duration_s`.
inline std::vector<double> request_rates(const StageWork& w, double duration_s) {
  std::vector<double> rps(w.loads.size());
  for (std::size_t i = 0; i < w.loads.size(); ++i) rps[i] = w.loads[i].requests / duration_s;
  return rps;
}

inline double total_requests(const StageWork& w) {
  double total = 0.0;
  for (const auto& l : w.loads) total += l.requests;
  return total;
}

inline double storage_money(const StageWork& w) {
  const auto& out = *w.loads[w.write_service].service;
  double c = 0.0;
  for (const auto& src : w.read_sources) c += src.requests * src.service->price_per_request;
  c += static_cast<double>(w.n_write) * out.price_per_request;
  c += w.d_output_gb * out.price_per_gb_write;
  return c;
}

inline CostBreakdown stage_money(const StageWork& w, std::span<const BilledGroup> billed,
                                 const PricingProfile& pricing) {
  CostBreakdown c;
  c.c_workers = worker_money(billed, w.memory_mb, pricing);
  c.c_storage = storage_money(w);
  c.c_stage = c.c_workers + c.c_storage;
  c.n_read_requests = w.n_read;
  c.n_write_requests = w.n_write;
  c.d_output_gb = w.d_output_gb;
  return c;
}

struct StageEstimate {
  TimeBreakdown time;
  CostBreakdown cost;
  double latency_s() const { return time.t_worker_s; }
};

// One-round fixed point on the request rate: the stage duration without
// throttling sets TotalReqPerSec, and the stage is re-timed at that rate.
inline StageEstimate evaluate_stage(const StageWork& w, const PricingProfile& pricing) {
  const std::vector<double> idle(w.loads.size(), 0.0);
  const double first_pass = worker_time(w, idle).t_worker_s;
  StageEstimate e;
  e.time = worker_time(w, request_rates(w, first_pass));
  e.time.request_rate_rps = total_requests(w) / first_pass;
  const BilledGroup group{e.time.billed_worker_s, w.workers};
  e.cost = stage_money(w, std::span(&group, 1), pricing);
  return e;
}

// ---------------------------------------------------------------------------
// Plan level

using PlanConfigs = std::map<StageId, StageConfig>;

struct StagePrediction {
  StageId id = 0;
  StageConfig config;
  TimeBreakdown time;
  CostBreakdown cost;
  double start_s = 0;
  double finish_s = 0;

  bool operator==(const StagePrediction&) const = default;
};

struct PredictionBreakdown {
  std::vector<StagePrediction> per_stage;  // ascending stage id
  double total_latency_s = 0;
  double total_cost = 0;

  bool operator==(const PredictionBreakdown&) const = default;
};

inline double stored_output_bytes(const LogicalStage& s, const CalibrationProfile& prof) {
  return static_cast<double>(s.output_bytes) * prof.op(s.op).compression_ratio;
}

// Checks one stage configuration against the platform and H5 rules.
inline void check_stage_config(const LogicalPlan& plan, StageId id, const PlanConfigs& configs,
                               const CalibrationProfile& prof) {
  const auto& c = configs.at(id);
  const auto sid = "stage " + std::to_string(id);
  if (c.workers < 1) throw ConfigError(sid + ": workers must be >= 1");
  const auto cores = prof.core_counts();
  if (std::find(cores.begin(), cores.end(), static_cast<int>(c.cores)) == cores.end())
    throw ConfigError(sid + ": " + std::to_string(c.cores) +
                      " cores is outside the platform memory bounds");
  if (c.memory_mb != c.cores * prof.platform.mem_per_core_mb)
    throw ConfigError(sid + ": memory_mb must equal cores * mem_per_core_mb");
  if (!prof.storages.count(c.storage))
    throw ConfigError(sid + ": unknown storage '" + c.storage + "'");
  const auto& consumers = plan.consumers(id);
  if (consumers.empty()) {
    if (c.partitions != 1) throw ConfigError(sid + ": terminal stage must write 1 partition");
    if (c.storage != prof.base_storage)
      throw ConfigError(sid + ": terminal stage must write to '" + prof.base_storage + "'");
  } else {
    for (StageId cons : consumers)
      if (c.partitions != configs.at(cons).workers)
        throw ConfigError(sid + ": partitions " + std::to_string(c.partitions) +
                          " != workers of consumer stage " + std::to_string(cons));
  }
}

inline std::vector<ProducerBinding> producer_bindings(const LogicalPlan& plan, StageId id,
                                                      const PlanConfigs& configs,
                                                      const CalibrationProfile& prof) {
  std::vector<ProducerBinding> out;
  for (StageId p : plan.stage(id).producers) {
    const auto& pc = configs.at(p);
    out.push_back({p, pc.workers, &prof.storage(pc.storage),
                   stored_output_bytes(plan.stage(p), prof)});
  }
  return out;
}

inline PredictionBreakdown predict_plan(const LogicalPlan& plan, const PlanConfigs& configs,
                                        const CalibrationProfile& prof) {
  prof.require_operators(plan);
  for (const auto& s : plan.stages())
    if (!configs.count(s.id))
      throw ConfigError("stage " + std::to_string(s.id) + ": not configured");
  for (const auto& s : plan.stages()) check_stage_config(plan, s.id, configs, prof);

  PredictionBreakdown out;
  out.per_stage.resize(plan.size());
  double cost = 0.0;
  double latency = 0.0;
  for (StageId id : plan.topological_stage_order()) {
    const auto& stage = plan.stage(id);
    const auto& cfg = configs.at(id);
    const auto bindings = producer_bindings(plan, id, configs, prof);
    const auto work =
        stage_work(stage, cfg.workers, cfg.cores, prof.storage(cfg.storage), bindings, prof);
    const auto est = evaluate_stage(work, prof.pricing);
    auto& sp = out.per_stage[id - 1];
    sp.id = id;
    sp.config = cfg;
    sp.time = est.time;
    sp.cost = est.cost;
    for (StageId p : stage.producers) sp.start_s = std::max(sp.start_s, out.per_stage[p - 1].finish_s);
    sp.finish_s = sp.start_s + est.latency_s();
    cost = cost + est.cost.c_stage;
    if (plan.is_terminal(id)) latency = std::max(latency, sp.finish_s);
  }
  out.total_cost = cost;
  out.total_latency_s = latency;
  return out;
}

}  // namespace faasplan
