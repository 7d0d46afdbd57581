#include <gtest/gtest.h>

#include "faasplan/calibration.hpp"
#include "test_support.hpp"

using namespace faasplan;

namespace {

json minimal_profile() {
  return json::parse(R"({
    "version": 1,
    "platform": {"client_inv_rate": 500, "cold_start_prob_small": 0.0, "cold_start_delay_ms": 300},
    "storages": {"S3Standard": {"base_latency_s": 0.02, "price_per_request": 4e-7,
                                "price_per_gb_write": 0.0}},
    "operators": {"scan": {"throughput_mb_per_core_s": 100, "decompress_mb_per_core_s": 200,
                           "compress_mb_per_core_s": 100, "compression_ratio": 0.5}},
    "pricing": {"worker_invocation_price": 2e-7, "worker_gb_second_price": 1.6667e-5}
  })");
}

}  // namespace

TEST(Calibration, OmittedFieldsTakeDefaults) {
  auto prof = profile_from_json(minimal_profile());
  const auto& p = prof.platform;
  EXPECT_EQ(p.provider_base_delay_ms, 40.0);
  EXPECT_EQ(p.provider_concurrency_limit, 1000.0);
  EXPECT_EQ(p.provider_over_limit_delay_ms_per_worker, 10.0);
  EXPECT_EQ(p.mem_per_core_mb, 1770.0);
  EXPECT_EQ(p.fetch_fast_bw_mbps, 300.0);
  EXPECT_EQ(p.fetch_fast_window_mb, 150.0);
  EXPECT_EQ(p.fetch_slow_bw_mbps, 70.0);
  EXPECT_EQ(p.cold_start_prob_large, 0.10);
  EXPECT_EQ(p.cold_start_scale_threshold, 500.0);
  const auto& s = prof.storage("S3Standard");
  EXPECT_EQ(s.throttle_threshold_rps, 5500.0);
  EXPECT_EQ(s.throttle_a, 0.65);
  EXPECT_EQ(s.throttle_b, 0.66);
  EXPECT_TRUE(prof.defaulted.count("platform.provider_base_delay_ms"));
  EXPECT_TRUE(prof.defaulted.count("storages.S3Standard.throttle_a"));
  EXPECT_FALSE(prof.defaulted.count("platform.client_inv_rate"));
}

TEST(Calibration, ReferenceProfileCarriesPublishedConstants) {
  auto prof = load_profile(faasplan::testing::data_path("reference_profile.json"));
  const auto& p = prof.platform;
  EXPECT_EQ(p.provider_base_delay_ms, 40.0);
  EXPECT_EQ(p.provider_concurrency_limit, 1000.0);
  EXPECT_EQ(p.provider_over_limit_delay_ms_per_worker, 10.0);
  EXPECT_EQ(p.mem_per_core_mb, 1770.0);
  EXPECT_EQ(p.fetch_fast_bw_mbps, 300.0);
  EXPECT_EQ(p.fetch_fast_window_mb, 150.0);
  EXPECT_EQ(p.fetch_slow_bw_mbps, 70.0);
  for (const auto& [id, s] : prof.storages) {
    EXPECT_EQ(s.throttle_threshold_rps, 5500.0) << id;
    EXPECT_EQ(s.throttle_a, 0.65) << id;
    EXPECT_EQ(s.throttle_b, 0.66) << id;
  }
  EXPECT_EQ(prof.operators.size(), kAllOperators.size());
}

TEST(Calibration, RejectsBadValues) {
  auto j = minimal_profile();
  j["storages"]["S3Standard"]["base_latency_s"] = -0.1;
  try {
    profile_from_json(j);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("base_latency_s"), std::string::npos);
  }

  j = minimal_profile();
  j["platform"]["cold_start_prob_small"] = 1.5;
  EXPECT_THROW(profile_from_json(j), ValidationError);

  j = minimal_profile();
  j["platform"]["worker_mem_min_mb"] = 2000;
  j["platform"]["worker_mem_max_mb"] = 3000;  // no multiple of 1770 inside
  EXPECT_THROW(profile_from_json(j), ValidationError);

  j = minimal_profile();
  j["platform"]["clientInvRate"] = 3;  // typo
  EXPECT_THROW(profile_from_json(j), ValidationError);

  j = minimal_profile();
  j.erase("version");
  EXPECT_THROW(profile_from_json(j), ValidationError);

  j = minimal_profile();
  j["base_storage"] = "S3OneZone";
  EXPECT_THROW(profile_from_json(j), ValidationError);

  j = minimal_profile();
  j["operators"]["scan"]["throughput_mb_per_core_s"] = 0;
  EXPECT_THROW(profile_from_json(j), ValidationError);
}

TEST(Calibration, CoreCounts) {
  auto prof = profile_from_json(minimal_profile());
  EXPECT_EQ(prof.core_counts(), (std::vector<int>{1, 2, 3, 4, 5}));
  prof.platform.worker_mem_min_mb = 1770;
  prof.platform.worker_mem_max_mb = 1770;
  EXPECT_EQ(prof.core_counts(), (std::vector<int>{1}));
}

TEST(Calibration, ColdStartStep) {
  auto prof = profile_from_json(minimal_profile());
  EXPECT_EQ(prof.platform.cold_start_probability(499), 0.0);
  EXPECT_EQ(prof.platform.cold_start_probability(500), 0.10);
}

TEST(Calibration, UnprofiledOperator) {
  auto prof = profile_from_json(minimal_profile());
  LogicalPlan plan("p", {faasplan::testing::stage(1, OperatorKind::Scan, {}, 10, 5),
                         faasplan::testing::stage(2, OperatorKind::Sort, {1}, 5, 5)});
  EXPECT_THROW(prof.require_operators(plan), OperatorUnprofiledError);
}

TEST(Calibration, RoundTripAndPurity) {
  const auto text = read_text_file(faasplan::testing::data_path("reference_profile.json"));
  auto a = parse_profile(text);
  auto b = parse_profile(text);
  EXPECT_EQ(to_json(a), to_json(b));
  auto c = profile_from_json(to_json(a));
  EXPECT_EQ(to_json(a), to_json(c));
  EXPECT_TRUE(c.defaulted.empty());
}
