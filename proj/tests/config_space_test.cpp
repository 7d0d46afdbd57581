#include <gtest/gtest.h>

#include <set>
#include <tuple>

#include "faasplan/config_space.hpp"
#include "test_support.hpp"

using namespace faasplan;
using faasplan::testing::kGiB;
using faasplan::testing::kMiB;

TEST(ConfigSpace, WorkerBoundsH1) {
  EXPECT_EQ(worker_bounds(0, kGiB, kGiB / 10), (WorkerBounds{1, 1}));
  EXPECT_EQ(worker_bounds(10 * kGiB, kGiB, kGiB / 10), (WorkerBounds{10, 100}));
  EXPECT_EQ(worker_bounds(kGiB / 10 - 1, kGiB, kGiB / 10), (WorkerBounds{1, 1}));
  const auto prof = faasplan::testing::unit_profile();
  EXPECT_EQ(worker_bounds_h1(100 * kGiB, prof, OperatorKind::GlobalAggregate),
            (WorkerBounds{1, 1}));
  // Defaults: 70% of 5 x 1770 MB, 32 MB floor.
  auto b = worker_bounds_h1(10 * kGiB, prof, OperatorKind::Scan);
  EXPECT_EQ(b.min, 2u);
  EXPECT_EQ(b.max, 320u);
}

TEST(ConfigSpace, SampleWorkersH2) {
  EXPECT_EQ(sample_workers_h2(3, 20), (std::vector<std::uint32_t>{3, 5, 7, 11, 19, 20}));
  EXPECT_EQ(sample_workers_h2(4, 4), (std::vector<std::uint32_t>{4}));
  EXPECT_EQ(sample_workers_h2(1, 1025),
            (std::vector<std::uint32_t>{1, 3, 5, 9, 17, 33, 65, 129, 257, 513, 1025}));
  for (std::uint32_t lo = 1; lo < 40; ++lo)
    for (std::uint32_t hi = lo; hi < 300; hi += 7) {
      auto v = sample_workers_h2(lo, hi);
      EXPECT_EQ(v.front(), lo);
      EXPECT_EQ(v.back(), hi);
      for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i - 1], v[i]);
    }
}

TEST(ConfigSpace, WorkerSizesH3) {
  auto prof = faasplan::testing::unit_profile();
  EXPECT_EQ(worker_sizes_h3(prof), (std::vector<std::uint32_t>{1, 2, 3, 4, 5}));
  prof.platform.worker_mem_min_mb = 1770;
  prof.platform.worker_mem_max_mb = 1770;
  EXPECT_EQ(worker_sizes_h3(prof), (std::vector<std::uint32_t>{1}));
}

TEST(ConfigSpace, AlignmentH4) {
  EXPECT_TRUE(filter_alignment_h4(10, 2, 40));
  EXPECT_FALSE(filter_alignment_h4(10, 3, 40));
  for (std::uint64_t w = 1; w < 50; ++w)
    for (std::uint64_t p = 1; p < 200; p += 3) EXPECT_TRUE(filter_alignment_h4(w, 1, p));
}

TEST(ConfigSpace, GenStageSpaceMinimal) {
  auto prof = faasplan::testing::unit_profile();
  prof.platform.worker_mem_min_mb = 1770;
  prof.platform.worker_mem_max_mb = 1770;
  auto sp = gen_stage_space(0, prof, OperatorKind::Scan);
  ASSERT_EQ(sp.entries.size(), 1u);
  EXPECT_EQ(sp.entries[0].workers, 1u);
  EXPECT_EQ(sp.entries[0].cores, (std::vector<std::uint32_t>{1}));
  EXPECT_EQ(sp.partition_constraint, "p_i = w_{i+1}");
}

TEST(ConfigSpace, GenStageSpaceKeyCount) {
  // 10 GiB with a 512 MiB floor: bounds (2, 20), grid {2,4,6,10,18,20}.
  auto prof = faasplan::testing::two_storage_profile();
  prof.platform.min_input_per_worker_mb = 512;
  auto sp = gen_stage_space(10 * kGiB, prof, OperatorKind::Join);
  EXPECT_EQ(sp.bounds, (WorkerBounds{2, 20}));
  EXPECT_EQ(sp.entries.size(), 12u);
  for (const auto& e : sp.entries) EXPECT_LE(e.cores.size(), 5u);
  EXPECT_LE(sp.size(), 6u * 5u * 2u);
}

TEST(ConfigSpace, EmptySpace) {
  auto prof = faasplan::testing::unit_profile();
  prof.platform.worker_mem_max_mb = 1770;
  prof.platform.working_set_fraction = 0.01;
  prof.platform.min_input_per_worker_mb = 1e9;
  // Bounds collapse to a single worker that cannot hold the input.
  EXPECT_THROW(gen_stage_space(100 * kGiB, prof, OperatorKind::GlobalAggregate), EmptySpaceError);
}

// Soundness and completeness against direct enumeration of all
// (w, cores, storage) triples on small bounds.
TEST(ConfigSpace, SoundAndCompleteAgainstBruteForce) {
  auto prof = faasplan::testing::two_storage_profile();
  prof.platform.min_input_per_worker_mb = 256;
  const auto max_b = max_input_bytes_per_worker(prof);
  const auto min_b = min_input_bytes_per_worker(prof);
  for (std::uint64_t card : std::vector<std::uint64_t>{0, 100 * kMiB, 3 * kGiB, 7 * kGiB + 5, 40 * kGiB}) {
    auto sp = gen_stage_space(card, prof, OperatorKind::Aggregate);
    std::set<std::tuple<std::uint32_t, std::uint32_t, std::string>> got, want;
    for (const auto& e : sp.entries)
      for (auto c : e.cores) got.insert({e.workers, c, e.storage});
    const auto w_lo = std::max<std::uint64_t>(1, (card + max_b - 1) / max_b);
    const auto w_hi = std::max<std::uint64_t>(w_lo, card / min_b);
    std::set<std::uint64_t> grid{w_lo, w_hi};
    for (std::uint64_t k = 2; w_lo + k <= w_hi; k *= 2) grid.insert(w_lo + k);
    for (std::uint64_t w = 1; w <= 2000; ++w) {
      if (!grid.count(w) || w < w_lo || w > w_hi) continue;
      for (std::uint32_t c = 1; c <= 20; ++c) {
        const double mem = c * 1770.0;
        if (mem < prof.platform.worker_mem_min_mb || mem > prof.platform.worker_mem_max_mb) continue;
        if (static_cast<double>(card) / w / kMiB > 0.7 * mem) continue;
        for (const auto& [id, _] : prof.storages) want.insert({std::uint32_t(w), c, id});
      }
    }
    EXPECT_EQ(got, want) << "card " << card;
  }
}
