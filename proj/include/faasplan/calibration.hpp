#pragma once

// Calibration profile: every measured or priced constant the cost model
// consumes. Profiles are loaded from JSON, validated strictly, and immutable
// afterwards. Omitted fields with a documented default are filled in and
// listed in `CalibrationProfile::defaulted`.

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "faasplan/error.hpp"
#include "faasplan/json_io.hpp"
#include "faasplan/plan_model.hpp"

namespace faasplan {

inline constexpr double kBytesPerMb = 1024.0 * 1024.0;
inline constexpr double kBytesPerGb = 1024.0 * 1024.0 * 1024.0;
inline constexpr double kMbPerGb = 1024.0;

struct PlatformProfile {
  double client_inv_rate = 0.0;  // invocations per second
  double provider_base_delay_ms = 40.0;
  double provider_concurrency_limit = 1000.0;
  double provider_over_limit_delay_ms_per_worker = 10.0;
  double mem_per_core_mb = 1770.0;
  double worker_mem_min_mb = 128.0;
  double worker_mem_max_mb = 10240.0;
  double fetch_fast_bw_mbps = 300.0;
  double fetch_fast_window_mb = 150.0;
  double fetch_slow_bw_mbps = 70.0;
  double cold_start_prob_small = 0.0;
  double cold_start_prob_large = 0.10;
  double cold_start_scale_threshold = 500.0;
  double cold_start_delay_ms = 0.0;
  // Worker-count bounds (H1): a worker never gets more input than this
  // fraction of the largest worker memory, and never less than
  // `min_input_per_worker_mb`.
  double working_set_fraction = 0.7;
  double min_input_per_worker_mb = 32.0;
  // Base-table file split size; a scan's input partitions are
  // ceil(input / split).
  double input_split_mb = 256.0;

  // Step model: below the scale threshold the small probability applies.
  double cold_start_probability(double workers) const {
    return workers < cold_start_scale_threshold ? cold_start_prob_small : cold_start_prob_large;
  }
};

struct StorageServiceProfile {
  std::string service_id;
  double base_latency_s = 0.0;
  double throttle_threshold_rps = 5500.0;
  double throttle_a = 0.65;
  double throttle_b = 0.66;
  double price_per_request = 0.0;
  double price_per_gb_write = 0.0;
};

struct OperatorProfile {
  OperatorKind op = OperatorKind::Scan;
  double throughput_mb_per_core_s = 0.0;
  double decompress_mb_per_core_s = 0.0;
  double compress_mb_per_core_s = 0.0;
  double compression_ratio = 1.0;  // stored bytes / logical bytes
};

struct PricingProfile {
  double worker_invocation_price = 0.0;
  double worker_gb_second_price = 0.0;
};

struct CalibrationProfile {
  int version = 0;
  std::string name;
  PlatformProfile platform;
  std::map<std::string, StorageServiceProfile> storages;
  std::map<OperatorKind, OperatorProfile> operators;
  PricingProfile pricing;
  // Storage holding base tables and final query results.
  std::string base_storage = "S3Standard";
  // Provenance: dotted paths of every field filled from a default.
  std::set<std::string> defaulted;

  const OperatorProfile& op(OperatorKind kind) const {
    auto it = operators.find(kind);
    if (it == operators.end())
      throw OperatorUnprofiledError("operator '" + std::string(to_string(kind)) +
                                    "' has no calibration entry");
    return it->second;
  }

  const StorageServiceProfile& storage(const std::string& id) const {
    auto it = storages.find(id);
    if (it == storages.end()) throw ValidationError("unknown storage service '" + id + "'");
    return it->second;
  }

  // Integer core counts whose memory fits the platform bounds (H3).
  std::vector<int> core_counts() const {
    std::vector<int> cores;
    const auto& p = platform;
    for (int c = 1; c * p.mem_per_core_mb <= p.worker_mem_max_mb; ++c)
      if (c * p.mem_per_core_mb >= p.worker_mem_min_mb) cores.push_back(c);
    return cores;
  }

  // Throws ValidationError naming the first violated constraint.
  void validate() const;
  // Rejects plans using an operator the profile does not cover.
  void require_operators(const LogicalPlan& plan) const {
    for (const auto& s : plan.stages())
      if (!operators.count(s.op))
        throw OperatorUnprofiledError("stage " + std::to_string(s.id) + ": operator '" +
                                      std::string(to_string(s.op)) + "' is not calibrated");
  }
};

namespace detail {

inline void check(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ValidationError(field + ": " + rule);
}
inline void positive(double v, const std::string& f) {
  check(std::isfinite(v) && v > 0.0, f, "must be > 0");
}
inline void non_negative(double v, const std::string& f) {
  check(std::isfinite(v) && v >= 0.0, f, "must be >= 0");
}
inline void probability(double v, const std::string& f) {
  check(std::isfinite(v) && v >= 0.0 && v <= 1.0, f, "must lie in [0,1]");
}

}  // namespace detail

inline void CalibrationProfile::validate() const {
  using namespace detail;
  check(version >= 1, "version", "must be >= 1");
  const auto& p = platform;
  positive(p.client_inv_rate, "platform.client_inv_rate");
  positive(p.provider_base_delay_ms, "platform.provider_base_delay_ms");
  positive(p.provider_concurrency_limit, "platform.provider_concurrency_limit");
  positive(p.provider_over_limit_delay_ms_per_worker,
           "platform.provider_over_limit_delay_ms_per_worker");
  positive(p.mem_per_core_mb, "platform.mem_per_core_mb");
  positive(p.worker_mem_min_mb, "platform.worker_mem_min_mb");
  positive(p.worker_mem_max_mb, "platform.worker_mem_max_mb");
  check(p.worker_mem_min_mb <= p.worker_mem_max_mb, "platform.worker_mem_min_mb",
        "must not exceed worker_mem_max_mb");
  positive(p.fetch_fast_bw_mbps, "platform.fetch_fast_bw_mbps");
  positive(p.fetch_fast_window_mb, "platform.fetch_fast_window_mb");
  positive(p.fetch_slow_bw_mbps, "platform.fetch_slow_bw_mbps");
  probability(p.cold_start_prob_small, "platform.cold_start_prob_small");
  probability(p.cold_start_prob_large, "platform.cold_start_prob_large");
  positive(p.cold_start_scale_threshold, "platform.cold_start_scale_threshold");
  positive(p.cold_start_delay_ms, "platform.cold_start_delay_ms");
  check(std::isfinite(p.working_set_fraction) && p.working_set_fraction > 0.0 &&
            p.working_set_fraction <= 1.0,
        "platform.working_set_fraction", "must lie in (0,1]");
  positive(p.min_input_per_worker_mb, "platform.min_input_per_worker_mb");
  positive(p.input_split_mb, "platform.input_split_mb");
  check(!core_counts().empty(), "platform.worker_mem_min_mb",
        "memory bounds admit no integral core count");

  check(!storages.empty(), "storages", "at least one storage service is required");
  for (const auto& [id, s] : storages) {
    auto f = "storages." + id;
    non_negative(s.base_latency_s, f + ".base_latency_s");
    positive(s.throttle_threshold_rps, f + ".throttle_threshold_rps");
    non_negative(s.throttle_a, f + ".throttle_a");
    non_negative(s.throttle_b, f + ".throttle_b");
    non_negative(s.price_per_request, f + ".price_per_request");
    non_negative(s.price_per_gb_write, f + ".price_per_gb_write");
  }
  check(storages.count(base_storage) == 1, "base_storage",
        "'" + base_storage + "' is not a configured storage service");
  for (const auto& [kind, o] : operators) {
    auto f = "operators." + std::string(to_string(kind));
    positive(o.throughput_mb_per_core_s, f + ".throughput_mb_per_core_s");
    positive(o.decompress_mb_per_core_s, f + ".decompress_mb_per_core_s");
    positive(o.compress_mb_per_core_s, f + ".compress_mb_per_core_s");
    positive(o.compression_ratio, f + ".compression_ratio");
  }
  non_negative(pricing.worker_invocation_price, "pricing.worker_invocation_price");
  non_negative(pricing.worker_gb_second_price, "pricing.worker_gb_second_price");
}

// ---------------------------------------------------------------------------
// JSON

inline CalibrationProfile profile_from_json(const json& doc) {
  using namespace detail;
  reject_unknown(doc, {"version", "name", "notes", "platform", "storages", "operators", "pricing",
                       "base_storage"},
                 "profile");
  CalibrationProfile prof;
  auto& def = prof.defaulted;
  prof.version = require<int>(doc, "version", "profile");
  prof.name = optional<std::string>(doc, "name", "", "profile");
  prof.base_storage = optional<std::string>(doc, "base_storage", "S3Standard", "profile", &def);

  {
    const std::string w = "platform";
    auto it = doc.find(w);
    if (it == doc.end()) throw ValidationError("platform: required section missing");
    const auto& j = *it;
    reject_unknown(j,
                   {"client_inv_rate", "provider_base_delay_ms", "provider_concurrency_limit",
                    "provider_over_limit_delay_ms_per_worker", "mem_per_core_mb",
                    "worker_mem_min_mb", "worker_mem_max_mb", "fetch_fast_bw_mbps",
                    "fetch_fast_window_mb", "fetch_slow_bw_mbps", "cold_start_prob_small",
                    "cold_start_prob_large", "cold_start_scale_threshold", "cold_start_delay_ms",
                    "working_set_fraction", "min_input_per_worker_mb", "input_split_mb"},
                   w);
    auto& p = prof.platform;
    const PlatformProfile d;
    p.client_inv_rate = require<double>(j, "client_inv_rate", w);
    p.provider_base_delay_ms =
        optional(j, "provider_base_delay_ms", d.provider_base_delay_ms, w, &def);
    p.provider_concurrency_limit =
        optional(j, "provider_concurrency_limit", d.provider_concurrency_limit, w, &def);
    p.provider_over_limit_delay_ms_per_worker =
        optional(j, "provider_over_limit_delay_ms_per_worker",
                 d.provider_over_limit_delay_ms_per_worker, w, &def);
    p.mem_per_core_mb = optional(j, "mem_per_core_mb", d.mem_per_core_mb, w, &def);
    p.worker_mem_min_mb = optional(j, "worker_mem_min_mb", d.worker_mem_min_mb, w, &def);
    p.worker_mem_max_mb = optional(j, "worker_mem_max_mb", d.worker_mem_max_mb, w, &def);
    p.fetch_fast_bw_mbps = optional(j, "fetch_fast_bw_mbps", d.fetch_fast_bw_mbps, w, &def);
    p.fetch_fast_window_mb = optional(j, "fetch_fast_window_mb", d.fetch_fast_window_mb, w, &def);
    p.fetch_slow_bw_mbps = optional(j, "fetch_slow_bw_mbps", d.fetch_slow_bw_mbps, w, &def);
    p.cold_start_prob_small = require<double>(j, "cold_start_prob_small", w);
    p.cold_start_prob_large =
        optional(j, "cold_start_prob_large", d.cold_start_prob_large, w, &def);
    p.cold_start_scale_threshold =
        optional(j, "cold_start_scale_threshold", d.cold_start_scale_threshold, w, &def);
    p.cold_start_delay_ms = require<double>(j, "cold_start_delay_ms", w);
    p.working_set_fraction = optional(j, "working_set_fraction", d.working_set_fraction, w, &def);
    p.min_input_per_worker_mb =
        optional(j, "min_input_per_worker_mb", d.min_input_per_worker_mb, w, &def);
    p.input_split_mb = optional(j, "input_split_mb", d.input_split_mb, w, &def);
  }

  {
    auto it = doc.find("storages");
    if (it == doc.end() || !it->is_object())
      throw ValidationError("storages: required object missing");
    for (const auto& [id, j] : it->items()) {
      auto w = "storages." + id;
      reject_unknown(j,
                     {"base_latency_s", "throttle_threshold_rps", "throttle_a", "throttle_b",
                      "price_per_request", "price_per_gb_write"},
                     w);
      StorageServiceProfile s;
      const StorageServiceProfile d;
      s.service_id = id;
      s.base_latency_s = require<double>(j, "base_latency_s", w);
      s.throttle_threshold_rps =
          optional(j, "throttle_threshold_rps", d.throttle_threshold_rps, w, &def);
      s.throttle_a = optional(j, "throttle_a", d.throttle_a, w, &def);
      s.throttle_b = optional(j, "throttle_b", d.throttle_b, w, &def);
      s.price_per_request = require<double>(j, "price_per_request", w);
      s.price_per_gb_write = require<double>(j, "price_per_gb_write", w);
      prof.storages.emplace(id, s);
    }
  }

  {
    auto it = doc.find("operators");
    if (it == doc.end() || !it->is_object())
      throw ValidationError("operators: required object missing");
    for (const auto& [name, j] : it->items()) {
      auto w = "operators." + name;
      auto kind = operator_from_string(name);
      if (!kind) throw ValidationError(w + ": unknown operator");
      reject_unknown(j,
                     {"throughput_mb_per_core_s", "decompress_mb_per_core_s",
                      "compress_mb_per_core_s", "compression_ratio"},
                     w);
      OperatorProfile o;
      o.op = *kind;
      o.throughput_mb_per_core_s = require<double>(j, "throughput_mb_per_core_s", w);
      o.decompress_mb_per_core_s = require<double>(j, "decompress_mb_per_core_s", w);
      o.compress_mb_per_core_s = require<double>(j, "compress_mb_per_core_s", w);
      o.compression_ratio = require<double>(j, "compression_ratio", w);
      prof.operators.emplace(*kind, o);
    }
  }

  {
    auto it = doc.find("pricing");
    if (it == doc.end()) throw ValidationError("pricing: required section missing");
    reject_unknown(*it, {"worker_invocation_price", "worker_gb_second_price"}, "pricing");
    prof.pricing.worker_invocation_price =
        require<double>(*it, "worker_invocation_price", "pricing");
    prof.pricing.worker_gb_second_price = require<double>(*it, "worker_gb_second_price", "pricing");
  }

  prof.validate();
  return prof;
}

// Full form: every field written out, so the result reloads without defaults.
inline json to_json(const CalibrationProfile& prof) {
  const auto& p = prof.platform;
  json storages = json::object();
  for (const auto& [id, s] : prof.storages)
    storages[id] = {{"base_latency_s", s.base_latency_s},
                    {"throttle_threshold_rps", s.throttle_threshold_rps},
                    {"throttle_a", s.throttle_a},
                    {"throttle_b", s.throttle_b},
                    {"price_per_request", s.price_per_request},
                    {"price_per_gb_write", s.price_per_gb_write}};
  json ops = json::object();
  for (const auto& [kind, o] : prof.operators)
    ops[std::string(to_string(kind))] = {{"throughput_mb_per_core_s", o.throughput_mb_per_core_s},
                                         {"decompress_mb_per_core_s", o.decompress_mb_per_core_s},
                                         {"compress_mb_per_core_s", o.compress_mb_per_core_s},
                                         {"compression_ratio", o.compression_ratio}};
  return {
      {"version", prof.version},
      {"name", prof.name},
      {"base_storage", prof.base_storage},
      {"platform",
       {{"client_inv_rate", p.client_inv_rate},
        {"provider_base_delay_ms", p.provider_base_delay_ms},
        {"provider_concurrency_limit", p.provider_concurrency_limit},
        {"provider_over_limit_delay_ms_per_worker", p.provider_over_limit_delay_ms_per_worker},
        {"mem_per_core_mb", p.mem_per_core_mb},
        {"worker_mem_min_mb", p.worker_mem_min_mb},
        {"worker_mem_max_mb", p.worker_mem_max_mb},
        {"fetch_fast_bw_mbps", p.fetch_fast_bw_mbps},
        {"fetch_fast_window_mb", p.fetch_fast_window_mb},
        {"fetch_slow_bw_mbps", p.fetch_slow_bw_mbps},
        {"cold_start_prob_small", p.cold_start_prob_small},
        {"cold_start_prob_large", p.cold_start_prob_large},
        {"cold_start_scale_threshold", p.cold_start_scale_threshold},
        {"cold_start_delay_ms", p.cold_start_delay_ms},
        {"working_set_fraction", p.working_set_fraction},
        {"min_input_per_worker_mb", p.min_input_per_worker_mb},
        {"input_split_mb", p.input_split_mb}}},
      {"storages", storages},
      {"operators", ops},
      {"pricing",
       {{"worker_invocation_price", prof.pricing.worker_invocation_price},
        {"worker_gb_second_price", prof.pricing.worker_gb_second_price}}}};
}

inline CalibrationProfile parse_profile(std::string_view text) {
  return profile_from_json(parse_json(text, "profile"));
}

inline CalibrationProfile load_profile(const std::filesystem::path& path) {
  return parse_profile(read_text_file(path));
}

}  // namespace faasplan
