#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "faasplan/calibration.hpp"
#include "faasplan/plan_model.hpp"

namespace faasplan::testing {

inline std::string data_path(const std::string& name) {
  return std::string(FAASPLAN_DATA_DIR) + "/" + name;
}

inline constexpr std::uint64_t kMiB = 1024ull * 1024ull;
inline constexpr std::uint64_t kGiB = 1024ull * kMiB;

// Small hand-checkable profile: one storage service, round constants.
inline CalibrationProfile unit_profile() {
  CalibrationProfile p;
  p.version = 1;
  p.name = "unit";
  p.platform.client_inv_rate = 1000.0;
  p.platform.cold_start_prob_small = 0.0;
  p.platform.cold_start_prob_large = 0.10;
  p.platform.cold_start_delay_ms = 1000.0;
  StorageServiceProfile s;
  s.service_id = "S3Standard";
  s.base_latency_s = 0.05;
  s.price_per_request = 1e-6;
  s.price_per_gb_write = 0.01;
  p.storages[s.service_id] = s;
  for (auto k : kAllOperators) {
    OperatorProfile o;
    o.op = k;
    o.throughput_mb_per_core_s = 175.0;
    o.decompress_mb_per_core_s = 350.0;
    o.compress_mb_per_core_s = 300.0;
    o.compression_ratio = 1.0;
    p.operators[k] = o;
  }
  p.pricing.worker_invocation_price = 2e-7;
  p.pricing.worker_gb_second_price = 1.6667e-5;
  p.validate();
  return p;
}

// Same as unit_profile with two storage services of different trade-offs.
inline CalibrationProfile two_storage_profile() {
  auto p = unit_profile();
  StorageServiceProfile z = p.storages.at("S3Standard");
  z.service_id = "S3OneZone";
  z.base_latency_s = 0.01;
  z.price_per_request = 5e-7;
  z.price_per_gb_write = 0.05;
  p.storages[z.service_id] = z;
  p.validate();
  return p;
}

inline LogicalStage stage(StageId id, OperatorKind op, std::vector<StageId> producers,
                          std::uint64_t in, std::uint64_t out) {
  return {id, op, std::move(producers), in, out, std::nullopt};
}

// Random DAG with consistent cardinalities; stage i draws producers from
// lower ids and the graph stays connected.
inline LogicalPlan random_plan(std::mt19937_64& rng, int n_stages, std::uint64_t max_scan_bytes) {
  std::vector<LogicalStage> stages;
  std::uniform_int_distribution<std::uint64_t> scan_bytes(1, max_scan_bytes);
  std::uniform_real_distribution<double> shrink(0.05, 1.0);
  for (int i = 1; i <= n_stages; ++i) {
    LogicalStage s;
    s.id = static_cast<StageId>(i);
    const bool scan = i == 1 || (i < n_stages && rng() % 3 == 0);
    if (scan) {
      s.op = OperatorKind::Scan;
      s.input_bytes = scan_bytes(rng);
    } else {
      s.producers.push_back(static_cast<StageId>(i - 1));
      for (int p = 1; p < i - 1; ++p)
        if (rng() % 3 == 0) s.producers.push_back(static_cast<StageId>(p));
      std::sort(s.producers.begin(), s.producers.end());
      s.op = s.producers.size() > 1 ? OperatorKind::Join
                                    : (rng() % 2 ? OperatorKind::Aggregate : OperatorKind::Join);
      for (auto p : s.producers) s.input_bytes += stages[p - 1].output_bytes;
    }
    s.output_bytes = static_cast<std::uint64_t>(static_cast<double>(s.input_bytes) * shrink(rng));
    stages.push_back(std::move(s));
  }
  // Every stage feeds something: dangling ones go into the last stage,
  // which is never a scan.
  auto& last = stages.back();
  for (auto& s : stages) {
    if (s.id == last.id) continue;
    bool consumed = false;
    for (const auto& t : stages)
      for (auto p : t.producers) consumed = consumed || p == s.id;
    if (consumed) continue;
    last.producers.push_back(s.id);
    last.input_bytes += s.output_bytes;
  }
  std::sort(last.producers.begin(), last.producers.end());
  if (last.producers.size() > 1) last.op = OperatorKind::Join;
  return LogicalPlan("random", std::move(stages));
}

}  // namespace faasplan::testing
