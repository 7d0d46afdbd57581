#pragma once

// Cost/latency dominance, Pareto filtering, knee point and preference-based
// selection over candidate plans.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "faasplan/cost_model.hpp"
#include "faasplan/error.hpp"

namespace faasplan {

struct Objective {
  double cost = 0;
  double latency_s = 0;
  bool operator==(const Objective&) const = default;
};

// a dominates b: no worse in both objectives and strictly better in one.
inline bool dominates(const Objective& a, const Objective& b) {
  return a.cost <= b.cost && a.latency_s <= b.latency_s &&
         (a.cost < b.cost || a.latency_s < b.latency_s);
}

struct CandidatePlan {
  PlanConfigs stage_configs;
  double predicted_latency_s = 0;
  double predicted_cost = 0;
  std::optional<PredictionBreakdown> breakdown;

  Objective objective() const { return {predicted_cost, predicted_latency_s}; }
};

// Canonical order of configurations used to break exact objective ties:
// lexicographic over (stage id, workers, cores, memory, partitions, storage).
inline bool config_less(const PlanConfigs& a, const PlanConfigs& b) { return a < b; }

// Indices of the nondominated points, in ascending cost. Of several points
// with identical objectives the one listed first in `points` is kept, so
// callers pre-order ties by their own tie-break.
inline std::vector<std::size_t> pareto_indices(const std::vector<Objective>& points) {
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].cost != points[b].cost) return points[a].cost < points[b].cost;
    return points[a].latency_s < points[b].latency_s;
  });
  std::vector<std::size_t> keep;
  for (auto i : order) {
    // Sorted by cost, so only the latency of the last kept point matters.
    if (keep.empty() || points[i].latency_s < points[keep.back()].latency_s) keep.push_back(i);
  }
  return keep;
}

// Nondominated subset in ascending cost; exact duplicates keep the smallest
// configuration encoding.
inline std::vector<CandidatePlan> pareto_filter(std::vector<CandidatePlan> plans) {
  std::stable_sort(plans.begin(), plans.end(), [](const CandidatePlan& a, const CandidatePlan& b) {
    return config_less(a.stage_configs, b.stage_configs);
  });
  std::vector<Objective> pts;
  pts.reserve(plans.size());
  for (const auto& p : plans) pts.push_back(p.objective());
  std::vector<CandidatePlan> out;
  for (auto i : pareto_indices(pts)) out.push_back(std::move(plans[i]));
  return out;
}

struct ParetoFrontier {
  std::vector<CandidatePlan> points;  // ascending cost, strictly descending latency
  std::size_t knee_index = 0;
};

// Knee: after min-max normalisation of both axes, the point farthest below
// the chord joining the cheapest and the fastest point. Ties go to the
// cheaper point; a frontier with no point below the chord yields 0.
inline std::size_t knee_point(const std::vector<Objective>& frontier) {
  if (frontier.empty()) throw ValidationError("knee point of an empty frontier");
  if (frontier.size() == 1) return 0;
  double cmin = frontier.front().cost, cmax = frontier.front().cost;
  double lmin = frontier.front().latency_s, lmax = frontier.front().latency_s;
  for (const auto& p : frontier) {
    cmin = std::min(cmin, p.cost);
    cmax = std::max(cmax, p.cost);
    lmin = std::min(lmin, p.latency_s);
    lmax = std::max(lmax, p.latency_s);
  }
  const double cspan = cmax - cmin, lspan = lmax - lmin;
  std::size_t best = 0;
  double best_dist = 0.0;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    const double x = cspan > 0 ? (frontier[i].cost - cmin) / cspan : 0.0;
    const double y = lspan > 0 ? (frontier[i].latency_s - lmin) / lspan : 0.0;
    // Chord from (0,1) to (1,0) is x + y = 1.
    const double dist = (1.0 - x - y) / std::sqrt(2.0);
    if (dist > best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

inline std::vector<Objective> objectives(const std::vector<CandidatePlan>& plans) {
  std::vector<Objective> out;
  out.reserve(plans.size());
  for (const auto& p : plans) out.push_back(p.objective());
  return out;
}

inline ParetoFrontier make_frontier(std::vector<CandidatePlan> plans) {
  ParetoFrontier f;
  f.points = pareto_filter(std::move(plans));
  if (!f.points.empty()) f.knee_index = knee_point(objectives(f.points));
  return f;
}

struct Preference {
  enum class Kind { Knee, Fastest, Cheapest, CostBudget, LatencyBudget };
  Kind kind = Kind::Knee;
  double bound = 0;

  std::string to_string() const {
    switch (kind) {
      case Kind::Knee: return "knee";
      case Kind::Fastest: return "fastest";
      case Kind::Cheapest: return "cheapest";
      case Kind::CostBudget: return "cost-budget=" + json(bound).dump();
      case Kind::LatencyBudget: return "latency-budget=" + json(bound).dump();
    }
    return "?";
  }
};

// Accepts knee | fastest | cheapest | cost-budget=<x> | latency-budget=<y>.
inline Preference parse_preference(std::string_view text) {
  using K = Preference::Kind;
  if (text == "knee") return {K::Knee, 0};
  if (text == "fastest") return {K::Fastest, 0};
  if (text == "cheapest") return {K::Cheapest, 0};
  auto budget = [&](std::string_view prefix, K kind) -> std::optional<Preference> {
    if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
    const std::string num(text.substr(prefix.size()));
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (num.empty() || used != num.size() || !std::isfinite(v) || v < 0)
      throw ValidationError("preference '" + std::string(text) + "': bad budget value");
    return Preference{kind, v};
  };
  if (auto p = budget("cost-budget=", K::CostBudget)) return *p;
  if (auto p = budget("latency-budget=", K::LatencyBudget)) return *p;
  throw ValidationError("unknown preference '" + std::string(text) + "'");
}

// Index of the frontier point a preference picks.
inline std::size_t select_index(const std::vector<Objective>& frontier, const Preference& pref,
                                std::size_t knee_index) {
  using K = Preference::Kind;
  if (frontier.empty()) throw ValidationError("cannot select from an empty frontier");
  auto argmin = [&](auto key, auto feasible) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      if (!feasible(frontier[i])) continue;
      if (!best || key(frontier[i]) < key(frontier[*best])) best = i;
    }
    return best;
  };
  auto by_cost = [](const Objective& o) { return o.cost; };
  auto by_latency = [](const Objective& o) { return o.latency_s; };
  auto any = [](const Objective&) { return true; };
  switch (pref.kind) {
    case K::Knee: return knee_index;
    case K::Fastest: return *argmin(by_latency, any);
    case K::Cheapest: return *argmin(by_cost, any);
    case K::CostBudget: {
      auto i = argmin(by_latency, [&](const Objective& o) { return o.cost <= pref.bound; });
      if (!i) {
        auto near = *argmin(by_cost, any);
        throw BudgetInfeasibleError("no plan costs <= " + json(pref.bound).dump() +
                                        "; cheapest is point " + std::to_string(near) +
                                        " at cost " + json(frontier[near].cost).dump(),
                                    near);
      }
      return *i;
    }
    case K::LatencyBudget: {
      auto i = argmin(by_cost, [&](const Objective& o) { return o.latency_s <= pref.bound; });
      if (!i) {
        auto near = *argmin(by_latency, any);
        throw BudgetInfeasibleError("no plan finishes within " + json(pref.bound).dump() +
                                        " s; fastest is point " + std::to_string(near) + " at " +
                                        json(frontier[near].latency_s).dump() + " s",
                                    near);
      }
      return *i;
    }
  }
  return knee_index;
}

inline const CandidatePlan& select_plan(const ParetoFrontier& frontier, const Preference& pref) {
  return frontier.points[select_index(objectives(frontier.points), pref, frontier.knee_index)];
}

}  // namespace faasplan
