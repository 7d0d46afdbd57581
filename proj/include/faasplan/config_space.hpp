#pragma once

// Per-stage configuration space and the heuristics that prune it:
//   H1  worker-count bounds from per-worker input limits
//   H2  exponentially spaced worker counts inside those bounds
//   H3  integral core counts (memory = cores * mem_per_core)
//   H4  input partitions per worker must be a multiple of the core count
//   H5  a producer's partition count equals its consumer's worker count
// H4 and H5 need the neighbouring stage, so they are applied while pairing
// stages during the search; the space only records the H5 constraint.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "faasplan/calibration.hpp"
#include "faasplan/cost_model.hpp"
#include "faasplan/error.hpp"

namespace faasplan {

struct WorkerBounds {
  std::uint32_t min = 1;
  std::uint32_t max = 1;
  bool operator==(const WorkerBounds&) const = default;
};

// Bounds for `card_bytes` of input when a worker takes at most
// `max_bytes_per_worker` and at least `min_bytes_per_worker`.
inline WorkerBounds worker_bounds(std::uint64_t card_bytes, std::uint64_t max_bytes_per_worker,
                                  std::uint64_t min_bytes_per_worker) {
  const auto lo = std::max<std::uint64_t>(1, ceil_div(card_bytes, max_bytes_per_worker));
  const auto hi = std::max<std::uint64_t>(lo, card_bytes / min_bytes_per_worker);
  return {static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi)};
}

inline std::uint64_t max_input_bytes_per_worker(const CalibrationProfile& prof) {
  const auto cores = prof.core_counts();
  const double largest_mb = cores.back() * prof.platform.mem_per_core_mb;
  return static_cast<std::uint64_t>(prof.platform.working_set_fraction * largest_mb * kBytesPerMb);
}

inline std::uint64_t min_input_bytes_per_worker(const CalibrationProfile& prof) {
  return std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(prof.platform.min_input_per_worker_mb * kBytesPerMb));
}

// H1. A global aggregate merges everything on a single worker.
inline WorkerBounds worker_bounds_h1(std::uint64_t card_bytes, const CalibrationProfile& prof,
                                     OperatorKind op) {
  if (op == OperatorKind::GlobalAggregate) return {1, 1};
  return worker_bounds(card_bytes, max_input_bytes_per_worker(prof),
                       min_input_bytes_per_worker(prof));
}

// H2: w_min, w_min + 2, w_min + 4, w_min + 8, ... up to w_max, and w_max.
inline std::vector<std::uint32_t> sample_workers_h2(std::uint32_t w_min, std::uint32_t w_max) {
  std::vector<std::uint32_t> out{w_min};
  for (std::uint64_t step = 2; w_min + step <= w_max; step *= 2)
    out.push_back(static_cast<std::uint32_t>(w_min + step));
  if (out.back() != w_max) out.push_back(w_max);
  return out;
}

// H3
inline std::vector<std::uint32_t> worker_sizes_h3(const CalibrationProfile& prof) {
  std::vector<std::uint32_t> out;
  for (int c : prof.core_counts()) out.push_back(static_cast<std::uint32_t>(c));
  return out;
}

// H4
inline bool filter_alignment_h4(std::uint64_t workers, std::uint64_t cores,
                                std::uint64_t incoming_partitions) {
  const auto per_worker = ceil_div(incoming_partitions, workers);
  return per_worker >= 1 && per_worker % cores == 0;
}

// Worker sizes valid for one (workers, storage) key.
struct SpaceEntry {
  std::uint32_t workers = 1;
  std::string storage;
  std::vector<std::uint32_t> cores;
};

struct StageSpace {
  WorkerBounds bounds;
  // Sorted by (workers, storage).
  std::vector<SpaceEntry> entries;
  // H5, applied when the consumer is configured.
  std::string partition_constraint = "p_i = w_{i+1}";

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.cores.size();
    return n;
  }
};

inline StageSpace gen_stage_space(std::uint64_t card_bytes, const CalibrationProfile& prof,
                                  OperatorKind op) {
  StageSpace space;
  space.bounds = worker_bounds_h1(card_bytes, prof, op);
  const auto counts = sample_workers_h2(space.bounds.min, space.bounds.max);
  const auto sizes = worker_sizes_h3(prof);
  for (auto w : counts) {
    // A worker's share of the input must fit its working set.
    std::vector<std::uint32_t> fitting;
    const double share_mb = static_cast<double>(card_bytes) / w / kBytesPerMb;
    for (auto c : sizes)
      if (share_mb <= prof.platform.working_set_fraction * c * prof.platform.mem_per_core_mb)
        fitting.push_back(c);
    if (fitting.empty()) continue;
    for (const auto& [id, _] : prof.storages) space.entries.push_back({w, id, fitting});
  }
  if (space.entries.empty())
    throw EmptySpaceError("no (workers, storage, size) combination fits " +
                          std::to_string(card_bytes) + " input bytes for operator '" +
                          std::string(to_string(op)) + "'");
  return space;
}

}  // namespace faasplan
