#pragma once

// Incremental Pareto boundary search and its exhaustive counterpart.
//
// Stages are configured one at a time in topological order. A partial plan
// ("node") records its accumulated cost, the latest finish among completed
// terminal stages, and the "open" stages: configured stages with at least one
// consumer still unconfigured. Only the open stages' worker count, storage
// service and pending partition count can influence later stages, so partial
// plans that agree on those can be compared directly, and any that is
// dominated in (cost, terminal latency, open finish times) is dropped.
//
// For a chain the open set is just the stage being appended, so this is the
// classic per-(workers, storage) local frontier. For general DAGs the key
// widens to every open stage, which keeps the pruning exact.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "faasplan/calibration.hpp"
#include "faasplan/config_space.hpp"
#include "faasplan/cost_model.hpp"
#include "faasplan/error.hpp"
#include "faasplan/pareto.hpp"
#include "faasplan/plan_model.hpp"

namespace faasplan {

struct SearchOptions {
  // Upper bound on the partial plans built for one (workers, storage) group.
  std::size_t local_space_cap = 100000;
};

struct SearchStats {
  // Indexed by position in the topological order.
  std::vector<std::size_t> pruned_space_sizes;
  std::vector<std::size_t> stage_space_sizes;
  // Product of the per-stage space sizes: the unpruned search space.
  double exhaustive_space_size = 1.0;
  std::size_t stage_evaluations = 0;
  std::size_t max_local_space = 0;
};

struct SearchResult {
  ParetoFrontier frontier;
  SearchStats stats;
};

namespace detail {

struct OpenStage {
  StageId id = 0;
  std::uint32_t workers = 0;
  std::uint16_t storage = 0;
  std::uint32_t partitions = 0;  // 0 until a consumer fixes it
  std::uint32_t pending_consumers = 0;
  double finish = 0;
};

struct Node {
  std::int64_t parent = -1;
  std::uint32_t workers = 0;
  std::uint32_t cores = 0;
  std::uint16_t storage = 0;
  double cost = 0;
  double terminal_latency = 0;
  std::vector<OpenStage> open;  // ascending id
};

struct StageValue {
  double c_stage;
  double latency_s;
};

class SearchContext {
 public:
  SearchContext(const LogicalPlan& plan, const CalibrationProfile& prof)
      : plan_(plan), prof_(prof), order_(plan.topological_stage_order()) {
    prof.require_operators(plan);
    for (const auto& [id, s] : prof.storages) {
      if (id == prof.base_storage) base_storage_ = static_cast<std::uint16_t>(ids_.size());
      ids_.push_back(id);
      services_.push_back(&s);
    }
    for (const auto& s : plan.stages()) stored_.push_back(stored_output_bytes(s, prof));
    for (StageId id : order_) {
      const auto& stage = plan.stage(id);
      auto space = gen_stage_space(stage.input_bytes, prof, stage.op);
      if (plan.is_terminal(id)) {
        std::erase_if(space.entries,
                      [&](const SpaceEntry& e) { return e.storage != prof.base_storage; });
        if (space.entries.empty())
          throw EmptySpaceError("stage " + std::to_string(id) + ": no configuration writes to '" +
                                prof.base_storage + "'");
      }
      spaces_.push_back(std::move(space));
    }
  }

  const LogicalPlan& plan() const { return plan_; }
  const std::vector<StageId>& order() const { return order_; }
  const StageSpace& space(std::size_t pos) const { return spaces_[pos]; }
  std::uint16_t storage_index(const std::string& id) const {
    return static_cast<std::uint16_t>(std::find(ids_.begin(), ids_.end(), id) - ids_.begin());
  }
  const std::string& storage_id(std::uint16_t i) const { return ids_[i]; }
  std::size_t evaluations() const { return evaluations_; }

  double exhaustive_space_size() const {
    double n = 1.0;
    for (const auto& s : spaces_) n *= static_cast<double>(s.size());
    return n;
  }

  void begin_stage() { memo_.clear(); }

  // Appends every valid sizing of `entry` for the stage at `pos` to `parent`.
  // Partial plans whose producers already promised a different partition
  // count, and sizes failing H4, are skipped.
  template <typename Emit>
  void extend(const Node& parent, std::int64_t parent_index, std::size_t pos,
              const SpaceEntry& entry, Emit&& emit) {
    const StageId id = order_[pos];
    const auto& stage = plan_.stage(id);
    const auto w = entry.workers;
    const auto s = storage_index(entry.storage);

    std::vector<const OpenStage*> producers;
    double start = 0.0;
    for (StageId p : stage.producers) {
      const OpenStage* op = find_open(parent, p);
      if (op == nullptr) throw std::logic_error("producer is not open");
      if (op->partitions != 0 && op->partitions != w) return;
      producers.push_back(op);
      start = std::max(start, op->finish);
    }

    const auto& values = stage_values(pos, entry, s, producers);
    for (std::size_t k = 0; k < entry.cores.size(); ++k) {
      if (!values[k]) continue;
      Node child;
      child.parent = parent_index;
      child.workers = w;
      child.cores = entry.cores[k];
      child.storage = s;
      child.cost = parent.cost + values[k]->c_stage;
      const double finish = start + values[k]->latency_s;
      child.terminal_latency = parent.terminal_latency;
      child.open.reserve(parent.open.size() + 1);
      for (const auto& o : parent.open) {
        OpenStage next = o;
        if (std::find(stage.producers.begin(), stage.producers.end(), o.id) !=
            stage.producers.end()) {
          next.partitions = w;
          if (--next.pending_consumers == 0) continue;
        }
        child.open.push_back(next);
      }
      const auto consumers = static_cast<std::uint32_t>(plan_.consumers(id).size());
      if (consumers == 0) {
        child.terminal_latency = std::max(child.terminal_latency, finish);
      } else {
        OpenStage self{id, w, s, 0, consumers, finish};
        auto at = std::lower_bound(child.open.begin(), child.open.end(), id,
                                   [](const OpenStage& a, StageId b) { return a.id < b; });
        child.open.insert(at, self);
      }
      emit(std::move(child));
    }
  }

 private:
  static const OpenStage* find_open(const Node& n, StageId id) {
    for (const auto& o : n.open)
      if (o.id == id) return &o;
    return nullptr;
  }

  // Stage cost and latency for every size of `entry`, given the producers'
  // worker counts and storage. Memoised per stage.
  const std::vector<std::optional<StageValue>>& stage_values(
      std::size_t pos, const SpaceEntry& entry, std::uint16_t s,
      const std::vector<const OpenStage*>& producers) {
    std::vector<std::uint32_t> key{static_cast<std::uint32_t>(pos), entry.workers, s};
    for (const auto* p : producers) {
      key.push_back(p->workers);
      key.push_back(p->storage);
    }
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;

    const StageId id = order_[pos];
    const auto& stage = plan_.stage(id);
    std::vector<ProducerBinding> bindings;
    for (const auto* p : producers)
      bindings.push_back({p->id, p->workers, services_[p->storage], stored_[p->id - 1]});
    std::vector<std::optional<StageValue>> values;
    const auto incoming = incoming_partitions(stage, entry.workers, bindings, prof_.platform);
    for (auto c : entry.cores) {
      if (!filter_alignment_h4(entry.workers, c, incoming)) {
        values.emplace_back();
        continue;
      }
      const auto work = stage_work(stage, entry.workers, c, *services_[s], bindings, prof_);
      const auto est = evaluate_stage(work, prof_.pricing);
      ++evaluations_;
      values.push_back(StageValue{est.cost.c_stage, est.latency_s()});
    }
    return memo_.emplace(std::move(key), std::move(values)).first->second;
  }

  const LogicalPlan& plan_;
  const CalibrationProfile& prof_;
  std::vector<StageId> order_;
  std::vector<std::string> ids_;
  std::vector<const StorageServiceProfile*> services_;
  std::uint16_t base_storage_ = 0;
  std::vector<double> stored_;
  std::vector<StageSpace> spaces_;
  std::map<std::vector<std::uint32_t>, std::vector<std::optional<StageValue>>> memo_;
  std::size_t evaluations_ = 0;
};

// Walks the parent chain of a node at `level` back to the root.
inline PlanConfigs reconstruct(const std::vector<std::vector<Node>>& levels, std::size_t level,
                               std::size_t index, const SearchContext& ctx,
                               const CalibrationProfile& prof) {
  PlanConfigs cfg;
  std::int64_t i = static_cast<std::int64_t>(index);
  for (std::size_t l = level + 1; l-- > 0;) {
    const auto& n = levels[l][static_cast<std::size_t>(i)];
    cfg[ctx.order()[l]] =
        make_stage_config(n.workers, n.cores, ctx.storage_id(n.storage), prof);
    i = n.parent;
  }
  // H5: partitions follow the consumer's worker count; terminals write one.
  for (auto& [id, c] : cfg) {
    const auto& consumers = ctx.plan().consumers(id);
    c.partitions = 1;
    if (!consumers.empty() && cfg.count(consumers.front()))
      c.partitions = cfg.at(consumers.front()).workers;
    else if (!consumers.empty())
      c.partitions = 0;
  }
  return cfg;
}

// Objective vector of a partial plan: cost, terminal latency, then the
// finish time of every open stage.
inline std::vector<double> objective_vector(const Node& n) {
  std::vector<double> v{n.cost, n.terminal_latency};
  for (const auto& o : n.open) v.push_back(o.finish);
  return v;
}

inline bool same_key(const Node& a, const Node& b) {
  if (a.open.size() != b.open.size()) return false;
  for (std::size_t i = 0; i < a.open.size(); ++i) {
    const auto &x = a.open[i], &y = b.open[i];
    if (x.id != y.id || x.workers != y.workers || x.storage != y.storage ||
        x.partitions != y.partitions)
      return false;
  }
  return true;
}

inline bool key_less(const Node& a, const Node& b) {
  auto tie = [](const OpenStage& o) {
    return std::tuple(o.id, o.workers, o.storage, o.partitions);
  };
  return std::lexicographical_compare(
      a.open.begin(), a.open.end(), b.open.begin(), b.open.end(),
      [&](const OpenStage& x, const OpenStage& y) { return tie(x) < tie(y); });
}

inline bool weakly_dominates(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

// Local Pareto pruning of one group of freshly extended partial plans.
inline std::vector<Node> prune_local(std::vector<Node> nodes,
                                     const std::function<PlanConfigs(const Node&)>& encode) {
  std::vector<std::vector<double>> obj(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) obj[i] = objective_vector(nodes[i]);
  std::vector<std::size_t> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key_less(nodes[a], nodes[b])) return true;
    if (key_less(nodes[b], nodes[a])) return false;
    if (obj[a] != obj[b]) return obj[a] < obj[b];
    return config_less(encode(nodes[a]), encode(nodes[b]));
  });

  std::vector<Node> out;
  std::size_t run = 0;
  while (run < order.size()) {
    std::size_t end = run + 1;
    while (end < order.size() && same_key(nodes[order[run]], nodes[order[end]])) ++end;
    // Lexicographic order guarantees no later vector dominates an earlier
    // one, so each candidate only has to be checked against the kept set.
    std::vector<std::size_t> kept;
    for (std::size_t r = run; r < end; ++r) {
      const auto i = order[r];
      bool dominated = false;
      for (auto k : kept)
        if (weakly_dominates(obj[k], obj[i])) {
          dominated = true;
          break;
        }
      if (!dominated) kept.push_back(i);
    }
    for (auto k : kept) out.push_back(std::move(nodes[k]));
    run = end;
  }
  return out;
}

inline CandidatePlan complete_candidate(PlanConfigs configs, const LogicalPlan& plan,
                                        const CalibrationProfile& prof, double cost,
                                        double latency) {
  CandidatePlan c;
  auto breakdown = predict_plan(plan, configs, prof);
  if (breakdown.total_cost != cost || breakdown.total_latency_s != latency)
    throw std::logic_error("search and predict_plan disagree on a complete plan");
  c.stage_configs = std::move(configs);
  c.predicted_cost = breakdown.total_cost;
  c.predicted_latency_s = breakdown.total_latency_s;
  c.breakdown = std::move(breakdown);
  return c;
}

}  // namespace detail

inline SearchResult incremental_pareto_search(const LogicalPlan& plan,
                                              const CalibrationProfile& prof,
                                              const SearchOptions& opts = {}) {
  using namespace detail;
  SearchContext ctx(plan, prof);
  SearchResult result;
  auto& stats = result.stats;
  stats.exhaustive_space_size = ctx.exhaustive_space_size();

  std::vector<std::vector<Node>> levels;
  levels.reserve(ctx.order().size() + 1);
  const Node root;
  for (std::size_t pos = 0; pos < ctx.order().size(); ++pos) {
    ctx.begin_stage();
    const auto& space = ctx.space(pos);
    stats.stage_space_sizes.push_back(space.size());
    std::vector<Node> pruned;
    auto encode = [&](const Node& n) {
      // Parent chain plus the node itself, for tie-breaking only.
      levels.push_back({n});
      auto cfg = reconstruct(levels, pos, 0, ctx, prof);
      levels.pop_back();
      return cfg;
    };
    for (const auto& entry : space.entries) {
      std::vector<Node> local;
      auto emit = [&](Node&& n) {
        local.push_back(std::move(n));
        if (local.size() > opts.local_space_cap)
          throw SpaceTooLargeError("stage " + std::to_string(ctx.order()[pos]) +
                                       ": local space exceeds the cap of " +
                                       std::to_string(opts.local_space_cap),
                                   static_cast<double>(local.size()));
      };
      if (pos == 0) {
        ctx.extend(root, -1, pos, entry, emit);
      } else {
        const auto& prev = levels[pos - 1];
        for (std::size_t i = 0; i < prev.size(); ++i)
          ctx.extend(prev[i], static_cast<std::int64_t>(i), pos, entry, emit);
      }
      stats.max_local_space = std::max(stats.max_local_space, local.size());
      for (auto& n : prune_local(std::move(local), encode)) pruned.push_back(std::move(n));
    }
    stats.pruned_space_sizes.push_back(pruned.size());
    levels.push_back(std::move(pruned));
  }
  stats.stage_evaluations = ctx.evaluations();

  const auto last = levels.size() - 1;
  const auto& final_level = levels[last];
  std::vector<Objective> pts;
  for (const auto& n : final_level) pts.push_back({n.cost, n.terminal_latency});
  // Keep exact duplicates of frontier points so the tie-break sees them all.
  std::vector<CandidatePlan> candidates;
  {
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
      return std::pair(pts[a].cost, pts[a].latency_s) < std::pair(pts[b].cost, pts[b].latency_s);
    });
    std::optional<Objective> best;
    for (auto i : idx) {
      if (best && !(pts[i].latency_s < best->latency_s) && !(pts[i] == *best)) continue;
      best = pts[i];
      candidates.push_back(complete_candidate(reconstruct(levels, last, i, ctx, prof), plan, prof,
                                              pts[i].cost, pts[i].latency_s));
    }
  }
  result.frontier = make_frontier(std::move(candidates));
  return result;
}

// Evaluates every complete plan of the heuristic space (H1-H5) and returns
// the Pareto frontier. Refuses spaces larger than `space_cap`.
inline SearchResult exhaustive_search(const LogicalPlan& plan, const CalibrationProfile& prof,
                                      double space_cap) {
  using namespace detail;
  SearchContext ctx(plan, prof);
  SearchResult result;
  result.stats.exhaustive_space_size = ctx.exhaustive_space_size();
  if (result.stats.exhaustive_space_size > space_cap)
    throw SpaceTooLargeError("search space of " +
                                 json(result.stats.exhaustive_space_size).dump() +
                                 " plans exceeds the cap of " + json(space_cap).dump(),
                             result.stats.exhaustive_space_size);
  const auto n_stages = ctx.order().size();
  for (std::size_t pos = 0; pos < n_stages; ++pos)
    result.stats.stage_space_sizes.push_back(ctx.space(pos).size());

  // Depth-first over the cross product; leaves record their choices.
  struct Leaf {
    Objective obj;
    std::size_t choices;  // offset into `choices`
  };
  std::vector<Leaf> leaves;
  std::vector<std::uint32_t> choices;  // (workers, cores, storage) per stage
  std::vector<Node> path(n_stages);

  std::function<void(std::size_t, const Node&)> descend = [&](std::size_t pos, const Node& parent) {
    for (const auto& entry : ctx.space(pos).entries) {
      ctx.extend(parent, -1, pos, entry, [&](Node&& child) {
        path[pos] = std::move(child);
        if (pos + 1 == n_stages) {
          leaves.push_back({{path[pos].cost, path[pos].terminal_latency}, choices.size()});
          for (const auto& n : path) {
            choices.push_back(n.workers);
            choices.push_back(n.cores);
            choices.push_back(n.storage);
          }
        } else {
          descend(pos + 1, path[pos]);
        }
      });
    }
  };
  descend(0, Node{});
  result.stats.stage_evaluations = ctx.evaluations();

  auto configs_of = [&](const Leaf& leaf) {
    PlanConfigs cfg;
    for (std::size_t pos = 0; pos < n_stages; ++pos) {
      const auto* c = &choices[leaf.choices + 3 * pos];
      cfg[ctx.order()[pos]] = make_stage_config(
          c[0], c[1], ctx.storage_id(static_cast<std::uint16_t>(c[2])), prof);
    }
    for (auto& [id, c] : cfg) {
      const auto& consumers = plan.consumers(id);
      c.partitions = consumers.empty() ? 1 : cfg.at(consumers.front()).workers;
    }
    return cfg;
  };

  std::vector<std::size_t> idx(leaves.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return std::pair(leaves[a].obj.cost, leaves[a].obj.latency_s) <
           std::pair(leaves[b].obj.cost, leaves[b].obj.latency_s);
  });
  std::vector<CandidatePlan> candidates;
  std::optional<Objective> best;
  for (auto i : idx) {
    const auto& o = leaves[i].obj;
    if (best && !(o.latency_s < best->latency_s) && !(o == *best)) continue;
    best = o;
    candidates.push_back(
        complete_candidate(configs_of(leaves[i]), plan, prof, o.cost, o.latency_s));
  }
  result.frontier = make_frontier(std::move(candidates));
  return result;
}

}  // namespace faasplan
