#pragma once

// Central-node UCB for causal trees, forests and general graphs with
// chordal chain components.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "bandit.hpp"
#include "causal_model.hpp"
#include "errors.hpp"
#include "graph.hpp"

namespace cbandit {

/// Rooted tree over host nodes. parent[i] is the host parent of nodes[i],
/// -1 for the root.
struct DirectedSubtree {
  std::vector<int> nodes;
  std::vector<int> parent;
  int root = -1;

  int index(int host) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), host);
    return it != nodes.end() && *it == host ? static_cast<int>(it - nodes.begin()) : -1;
  }
  bool contains(int host) const { return index(host) >= 0; }
};

/// Rooted tree over a subset of a junction tree's cliques (indices into
/// that junction tree). parent[i] is the parent of cliques[i], -1 for root.
struct DirectedSubJunctionTree {
  std::vector<int> cliques;
  std::vector<int> parent;
  int root = -1;

  int index(int c) const {
    auto it = std::lower_bound(cliques.begin(), cliques.end(), c);
    return it != cliques.end() && *it == c ? static_cast<int>(it - cliques.begin()) : -1;
  }
};

/// Shared state of one search: the environment, the per-intervention
/// repetition count, the thresholds and the observational reward estimate.
struct SearchContext {
  Environment& env;
  std::int64_t B;
  AssumptionMargins margins;
  double reward_estimate = 0;
  StageOutcome& outcome;
  int component = 0;
};

namespace detail {

struct OutOfRounds {};

inline int iteration_cap(int m) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(std::max(m, 2))))) + 1;
}

inline BlockEstimate probe(SearchContext& ctx, const Intervention& a) {
  Environment& env = ctx.env;
  const CausalInstance& inst = env.instance();
  BlockEstimate blk;
  blk.stage = env.stage();
  blk.action = a;
  blk.frequencies.resize(static_cast<std::size_t>(inst.size()));
  for (int v = 0; v < inst.size(); ++v)
    blk.frequencies[static_cast<std::size_t>(v)].assign(static_cast<std::size_t>(inst.domain(v)), 0.0);
  double sum = 0;
  for (std::int64_t b = 0; b < ctx.B; ++b) {
    if (env.exhausted()) throw OutOfRounds{};
    const auto p = env.pull(a);
    sum += p.reward;
    for (std::size_t v = 0; v < p.values.size(); ++v)
      blk.frequencies[v][static_cast<std::size_t>(p.values[v])] += 1.0;
    ++blk.pulls;
  }
  blk.reward_mean = sum / static_cast<double>(blk.pulls);
  for (auto& f : blk.frequencies)
    for (double& x : f) x /= static_cast<double>(blk.pulls);
  ctx.outcome.blocks.push_back(blk);
  return blk;
}

inline bool reward_gap(const SearchContext& ctx, const BlockEstimate& blk) {
  return std::abs(ctx.reward_estimate - blk.reward_mean) > ctx.margins.delta_gap / 2;
}

inline bool effect_on(const SearchContext& ctx, const BlockEstimate& blk, int host_node) {
  const auto& obs = ctx.env.observational()[static_cast<std::size_t>(host_node)];
  const auto& emp = blk.frequencies[static_cast<std::size_t>(host_node)];
  for (std::size_t y = 0; y < obs.size(); ++y)
    if (std::abs(obs[y] - emp[y]) > ctx.margins.epsilon_margin / 2) return true;
  return false;
}

inline std::vector<int> support(const WeightedTree& wt) {
  std::vector<int> out;
  for (int v = 0; v < wt.tree.size(); ++v)
    if (wt.q[static_cast<std::size_t>(v)] > 0) out.push_back(v);
  return out;
}

/// Keeps q = 1 on `keep` survivors, 0 elsewhere, and normalizes. Returns the
/// locally indexed elements that left the support, and fills the trace.
inline std::vector<int> restrict_support(WeightedTree& wt, const std::vector<char>& keep, IterationTrace& tr) {
  std::vector<int> gone;
  double before = 0, removed = 0;
  std::vector<double> next(wt.q.size(), 0.0);
  for (std::size_t v = 0; v < wt.q.size(); ++v) {
    before += wt.q[v];
    if (wt.q[v] <= 0) continue;
    if (keep[v]) {
      next[v] = 1.0;
    } else {
      removed += wt.q[v];
      gone.push_back(static_cast<int>(v));
    }
  }
  tr.support_before = wt.support_size();
  wt.q = std::move(next);
  wt.normalize();
  tr.support_after = wt.support_size();
  tr.eliminated_mass = before > 0 ? removed / before : 0;
  return gone;
}

inline void add_arms(std::vector<Intervention>& arms, int host, const CausalInstance& inst) {
  for (int k = 0; k < inst.actions().count; ++k) arms.push_back(Intervention::set(host, inst.actions().value(k)));
}

inline void check_config(const CausalInstance& inst, const AlgoConfig& cfg) {
  if (cfg.K != inst.actions().count)
    throw InvalidConfig("K = " + std::to_string(cfg.K) + " does not match the instance's action domain size " +
                        std::to_string(inst.actions().count));
  if (cfg.horizon < 1) throw InvalidConfig("horizon must be at least 1");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
  cfg.margins.validate();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

/// Stage 1 on one tree component: central-node interventions until an
/// ancestor of the reward node is found; returns the directed subtree below
/// it, or nullopt once the support is exhausted or the iteration guard hits.
inline std::optional<DirectedSubtree> find_subtree(SearchContext& ctx, const Subgraph& comp) {
  const UndirectedGraph& g = comp.graph;
  if (!is_tree(g)) throw NotATree("chain component is not a tree");
  Environment& env = ctx.env;
  const CausalInstance& inst = env.instance();
  env.set_stage(Stage::stage1);
  const int m = g.size();
  WeightedTree wt = WeightedTree::uniform(g);
  const int cap = detail::iteration_cap(m);

  for (int it = 0; it < cap; ++it) {
    if (wt.support_size() == 0) return std::nullopt;
    const int vc = find_central_node(wt);
    const int host_vc = comp.nodes[static_cast<std::size_t>(vc)];
    const auto& nb = g.neighbors(vc);
    std::vector<char> down(nb.size(), 0);
    bool found = false;
    for (int k = 0; k < inst.actions().count; ++k) {
      const auto blk = detail::probe(ctx, Intervention::set(host_vc, inst.actions().value(k)));
      if (detail::reward_gap(ctx, blk)) found = true;
      for (std::size_t i = 0; i < nb.size(); ++i)
        if (detail::effect_on(ctx, blk, comp.nodes[static_cast<std::size_t>(nb[i])])) down[i] = 1;
    }
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const int hy = comp.nodes[static_cast<std::size_t>(nb[i])];
      ctx.outcome.orientations.push_back(down[i] ? std::pair{host_vc, hy} : std::pair{hy, host_vc});
    }

    IterationTrace tr{Stage::stage1, ctx.component, it, {host_vc}, 0, 0, 0, found};
    std::vector<char> keep(static_cast<std::size_t>(m), 0);
    if (found) {
      keep[static_cast<std::size_t>(vc)] = 1;
      for (std::size_t i = 0; i < nb.size(); ++i)
        if (down[i])
          for (int x : branch(g, vc, nb[i]))
            if (wt.q[static_cast<std::size_t>(x)] > 0) keep[static_cast<std::size_t>(x)] = 1;
      // orient away from vc over the kept, connected part
      std::vector<int> parent(static_cast<std::size_t>(m), -2);
      parent[static_cast<std::size_t>(vc)] = -1;
      std::vector<int> order{vc};
      for (std::size_t i = 0; i < order.size(); ++i)
        for (int w : g.neighbors(order[i]))
          if (keep[static_cast<std::size_t>(w)] && parent[static_cast<std::size_t>(w)] == -2) {
            parent[static_cast<std::size_t>(w)] = order[i];
            order.push_back(w);
          }
      std::vector<char> reached(static_cast<std::size_t>(m), 0);
      for (int v : order) reached[static_cast<std::size_t>(v)] = 1;
      const auto gone = detail::restrict_support(wt, reached, tr);
      for (int v : gone)
        ctx.outcome.eliminations.push_back({Stage::stage1, ctx.component, it, {comp.nodes[static_cast<std::size_t>(v)]},
                                            EliminationRule::upstream_of_ancestor});
      ctx.outcome.iterations.push_back(tr);

      DirectedSubtree st;
      std::sort(order.begin(), order.end());
      for (int v : order) {
        st.nodes.push_back(comp.nodes[static_cast<std::size_t>(v)]);
        const int p = parent[static_cast<std::size_t>(v)];
        st.parent.push_back(p < 0 ? -1 : comp.nodes[static_cast<std::size_t>(p)]);
      }
      st.root = host_vc;
      return st;
    }

    for (std::size_t i = 0; i < nb.size(); ++i)
      if (!down[i])
        for (int x : branch(g, vc, nb[i])) keep[static_cast<std::size_t>(x)] = 1;
    const auto gone = detail::restrict_support(wt, keep, tr);
    for (int v : gone)
      ctx.outcome.eliminations.push_back({Stage::stage1, ctx.component, it, {comp.nodes[static_cast<std::size_t>(v)]},
                                          EliminationRule::downstream_of_non_ancestor});
    ctx.outcome.iterations.push_back(tr);
  }
  return std::nullopt;
}

/// Stage 2: locates the reward node inside a directed subtree. nullopt
/// signals a (low probability) failure.
inline std::optional<int> find_key_node(SearchContext& ctx, const DirectedSubtree& st) {
  Environment& env = ctx.env;
  const CausalInstance& inst = env.instance();
  env.set_stage(Stage::stage2);
  const int m = static_cast<int>(st.nodes.size());
  if (m == 0) return std::nullopt;
  UndirectedGraph g(m);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(m));
  std::vector<int> parent(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    const int p = st.parent[static_cast<std::size_t>(i)];
    if (p < 0) continue;
    const int j = st.index(p);
    parent[static_cast<std::size_t>(i)] = j;
    g.add_edge(i, j);
    children[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& c : children) std::sort(c.begin(), c.end());
  WeightedTree wt = WeightedTree::uniform(g);
  const int cap = detail::iteration_cap(m);

  for (int it = 0; it < cap; ++it) {
    const auto sup = detail::support(wt);
    if (sup.size() == 1) return st.nodes[static_cast<std::size_t>(sup.front())];
    if (sup.empty()) return std::nullopt;
    const int vc = find_central_node(wt);
    const int host_vc = st.nodes[static_cast<std::size_t>(vc)];
    bool down = false;
    for (int k = 0; k < inst.actions().count; ++k)
      if (detail::reward_gap(ctx, detail::probe(ctx, Intervention::set(host_vc, inst.actions().value(k))))) down = true;

    IterationTrace tr{Stage::stage2, ctx.component, it, {host_vc}, 0, 0, 0, down};
    std::vector<char> keep(static_cast<std::size_t>(m), 0);
    if (!down) {
      const int p = parent[static_cast<std::size_t>(vc)];
      if (p >= 0)
        for (int x : branch(g, vc, p)) keep[static_cast<std::size_t>(x)] = 1;
      const auto gone = detail::restrict_support(wt, keep, tr);
      for (int v : gone)
        ctx.outcome.eliminations.push_back({Stage::stage2, ctx.component, it, {st.nodes[static_cast<std::size_t>(v)]},
                                            EliminationRule::downstream_of_non_ancestor});
      ctx.outcome.iterations.push_back(tr);
      continue;
    }

    int reward_child = -1;
    for (int c : children[static_cast<std::size_t>(vc)]) {
      bool gap = false;
      for (int k = 0; k < inst.actions().count; ++k)
        if (detail::reward_gap(ctx, detail::probe(ctx, Intervention::set(st.nodes[static_cast<std::size_t>(c)], inst.actions().value(k)))))
          gap = true;
      if (gap) {
        reward_child = c;
        break;
      }
    }
    if (reward_child < 0) {
      tr.support_before = tr.support_after = static_cast<int>(sup.size());
      ctx.outcome.iterations.push_back(tr);
      return host_vc;
    }
    for (int x : branch(g, vc, reward_child)) keep[static_cast<std::size_t>(x)] = 1;
    std::vector<char> upstream(static_cast<std::size_t>(m), 0);
    upstream[static_cast<std::size_t>(vc)] = 1;
    if (parent[static_cast<std::size_t>(vc)] >= 0)
      for (int x : branch(g, vc, parent[static_cast<std::size_t>(vc)])) upstream[static_cast<std::size_t>(x)] = 1;
    const auto gone = detail::restrict_support(wt, keep, tr);
    for (int v : gone)
      ctx.outcome.eliminations.push_back({Stage::stage2, ctx.component, it, {st.nodes[static_cast<std::size_t>(v)]},
                                          upstream[static_cast<std::size_t>(v)] ? EliminationRule::upstream_of_ancestor
                                                                                : EliminationRule::not_in_reward_branch});
    ctx.outcome.iterations.push_back(tr);
  }
  const auto sup = detail::support(wt);
  if (sup.size() == 1) return st.nodes[static_cast<std::size_t>(sup.front())];
  return std::nullopt;
}

namespace detail {

/// Observation phase: B empty interventions give the reward estimate.
inline double observe(SearchContext& ctx) {
  ctx.env.set_stage(Stage::observe);
  return probe(ctx, Intervention::none()).reward_mean;
}

inline void finish_with_ucb(Environment& env, StageOutcome& out, std::optional<std::vector<int>> arm_nodes) {
  const CausalInstance& inst = env.instance();
  std::vector<Intervention> arms;
  if (arm_nodes) {
    for (int v : *arm_nodes) add_arms(arms, v, inst);
  } else {
    out.fallback = true;
    arms = inst.action_set();
  }
  out.stage3_arms = static_cast<int>(arms.size());
  if (!env.exhausted()) run_ucb(env, arms, Stage::stage3);
}

inline RunLog close(Environment& env, StageOutcome&& out) {
  const auto rounds = env.log().outcome.rounds;
  RunLog log = env.take_log();
  log.outcome = std::move(out);
  log.outcome.rounds = rounds;
  return log;
}

/// Stages 1-3 over the tree components, in order, until stage 2 names a
/// node. Shared by the tree and forest drivers.
inline RunLog run_tree_components(const CausalInstance& inst, const AlgoConfig& cfg, std::uint64_t seed,
                                  std::string algorithm, const std::vector<Subgraph>& comps, double budget_cap) {
  Environment env(inst, seed, cfg.horizon);
  StageOutcome out;
  out.algorithm = std::move(algorithm);
  out.budget = resolve_budget(cfg, inst.size());
  out.budget_cap = budget_cap;
  SearchContext ctx{env, out.budget, cfg.margins, 0.0, out, 0};
  std::optional<int> key;
  try {
    ctx.reward_estimate = observe(ctx);
    for (std::size_t c = 0; c < comps.size() && !key; ++c) {
      ctx.component = static_cast<int>(c);
      auto st = find_subtree(ctx, comps[c]);
      if (!st) continue;
      key = find_key_node(ctx, *st);
    }
  } catch (const OutOfRounds&) {
    return close(env, std::move(out));
  }
  out.identified_node = key;
  if (key)
    finish_with_ucb(env, out, std::vector<int>{*key});
  else
    finish_with_ucb(env, out, std::nullopt);
  return close(env, std::move(out));
}

}  // namespace detail

/// CN-UCB on an instance whose essential graph is an undirected tree.
inline RunLog cn_ucb_tree(const CausalInstance& inst, const AlgoConfig& cfg, std::uint64_t seed) {
  detail::check_config(inst, cfg);
  const EssentialGraph eg = essential_graph(inst.dag());
  const UndirectedGraph skel = eg.skeleton();
  if (!eg.directed.empty() || !is_tree(skel)) throw NotATree("essential graph is not an undirected tree");
  const std::int64_t B = resolve_budget(cfg, inst.size());
  Subgraph whole = induced_subgraph(skel, [&] {
    std::vector<int> all(static_cast<std::size_t>(inst.size()));
    std::iota(all.begin(), all.end(), 0);
    return all;
  }());
  return detail::run_tree_components(inst, cfg, seed, "cn-ucb-tree", {whole},
                                     tree_budget_bound(inst.size(), cfg.K, B, skel.max_degree()));
}

/// CN-UCB on a causal forest: every chain component must be a tree.
inline RunLog cn_ucb_forest(const CausalInstance& inst, const AlgoConfig& cfg, std::uint64_t seed) {
  detail::check_config(inst, cfg);
  const EssentialGraph eg = essential_graph(inst.dag());
  auto comps = chain_components(eg);
  for (const auto& c : comps)
    if (!is_tree(c.graph)) throw NotATree("chain component containing node " + std::to_string(c.nodes.front()) + " is not a tree");
  const std::int64_t B = resolve_budget(cfg, inst.size());
  return detail::run_tree_components(
      inst, cfg, seed, "cn-ucb-forest", comps,
      forest_budget_bound(inst.size(), cfg.K, B, eg.skeleton().max_degree(), static_cast<int>(comps.size())));
}

// ---------------------------------------------------------------------------
// General graphs
// ---------------------------------------------------------------------------

/// do(Z = z) for every Z in the clique (host indices) and every action
/// value, B pulls each.
inline std::vector<BlockEstimate> clique_intervention(SearchContext& ctx, const std::vector<int>& clique) {
  const CausalInstance& inst = ctx.env.instance();
  std::vector<BlockEstimate> out;
  for (int z : clique)
    for (int k = 0; k < inst.actions().count; ++k) out.push_back(detail::probe(ctx, Intervention::set(z, inst.actions().value(k))));
  return out;
}

namespace detail {

inline std::vector<int> to_host(const Subgraph& comp, const std::vector<int>& local) {
  std::vector<int> out;
  for (int v : local) out.push_back(comp.nodes[static_cast<std::size_t>(v)]);
  return out;
}

inline bool any_gap(const SearchContext& ctx, const std::vector<BlockEstimate>& blocks) {
  return std::any_of(blocks.begin(), blocks.end(), [&](const BlockEstimate& b) { return reward_gap(ctx, b); });
}

/// Nodes of a probed clique whose interventions move the reward (ancestors
/// of X_R, or X_R itself), and among them the ones with no detected effect
/// on the others. Inside a clique the ancestors form a prefix of the causal
/// order, so under the good event there is exactly one such last node.
struct CliqueReading {
  std::vector<int> gap_nodes;
  std::vector<int> last;
};

inline CliqueReading read_clique(const SearchContext& ctx, const std::vector<BlockEstimate>& blocks) {
  CliqueReading r;
  for (const auto& b : blocks)
    if (reward_gap(ctx, b)) r.gap_nodes.push_back(b.action.node());
  std::sort(r.gap_nodes.begin(), r.gap_nodes.end());
  r.gap_nodes.erase(std::unique(r.gap_nodes.begin(), r.gap_nodes.end()), r.gap_nodes.end());
  for (int g : r.gap_nodes) {
    bool moves_other = false;
    for (const auto& b : blocks)
      if (b.action.node() == g)
        for (int h : r.gap_nodes)
          if (h != g && effect_on(ctx, b, h)) moves_other = true;
    if (!moves_other) r.last.push_back(g);
  }
  if (r.last.empty()) r.last = r.gap_nodes;
  return r;
}

inline bool meets(const std::vector<int>& sorted_nodes, const std::vector<int>& probe) {
  return std::any_of(probe.begin(), probe.end(),
                     [&](int v) { return std::binary_search(sorted_nodes.begin(), sorted_nodes.end(), v); });
}

}  // namespace detail

/// Stage 1 at clique granularity over a clique tree `jt` of `comp` (cliques
/// in local indices of comp).
inline std::optional<DirectedSubJunctionTree> find_sub_junction_tree(SearchContext& ctx, const Subgraph& comp,
                                                                     const JunctionTree& jt) {
  Environment& env = ctx.env;
  env.set_stage(Stage::stage1);
  const int m = jt.size();
  if (m == 0) return std::nullopt;
  WeightedTree wt = WeightedTree::uniform(jt.tree);
  const int cap = detail::iteration_cap(m);

  for (int it = 0; it < cap; ++it) {
    if (wt.support_size() == 0) return std::nullopt;
    const int cc = find_central_node(wt);
    const auto& central = jt.cliques[static_cast<std::size_t>(cc)];
    const auto host_central = detail::to_host(comp, central);
    const auto blocks = clique_intervention(ctx, host_central);
    const bool found = detail::any_gap(ctx, blocks);

    const auto& nb = jt.tree.neighbors(cc);
    std::vector<char> down(nb.size(), 0);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const auto& cy = jt.cliques[static_cast<std::size_t>(nb[i])];
      const auto shared = intersect(central, cy);
      const auto priv = difference(cy, central);
      bool all = true;
      for (int z : shared)
        for (int y : priv) {
          bool some = false;
          for (const auto& blk : blocks)
            if (blk.action.node() == comp.nodes[static_cast<std::size_t>(z)] &&
                detail::effect_on(ctx, blk, comp.nodes[static_cast<std::size_t>(y)]))
              some = true;
          if (!some) all = false;
        }
      down[i] = all ? 1 : 0;
      const auto host_cy = detail::to_host(comp, cy);
      ctx.outcome.clique_orientations.push_back(down[i] ? std::pair{host_central, host_cy}
                                                        : std::pair{host_cy, host_central});
    }

    IterationTrace tr{Stage::stage1, ctx.component, it, host_central, 0, 0, 0, found};
    std::vector<char> keep(static_cast<std::size_t>(m), 0);
    if (found) {
      // X_R is in the central clique or behind a separator holding its last
      // ancestor there, whichever way that clique edge points
      const auto reading = detail::read_clique(ctx, blocks);
      keep[static_cast<std::size_t>(cc)] = 1;
      for (std::size_t i = 0; i < nb.size(); ++i) {
        const auto sep = detail::to_host(comp, intersect(central, jt.cliques[static_cast<std::size_t>(nb[i])]));
        if (detail::meets(sep, reading.last))
          for (int x : branch(jt.tree, cc, nb[i]))
            if (wt.q[static_cast<std::size_t>(x)] > 0) keep[static_cast<std::size_t>(x)] = 1;
      }
      std::vector<int> parent(static_cast<std::size_t>(m), -2);
      parent[static_cast<std::size_t>(cc)] = -1;
      std::vector<int> order{cc};
      for (std::size_t i = 0; i < order.size(); ++i)
        for (int w : jt.tree.neighbors(order[i]))
          if (keep[static_cast<std::size_t>(w)] && parent[static_cast<std::size_t>(w)] == -2) {
            parent[static_cast<std::size_t>(w)] = order[i];
            order.push_back(w);
          }
      std::vector<char> reached(static_cast<std::size_t>(m), 0);
      for (int v : order) reached[static_cast<std::size_t>(v)] = 1;
      const auto gone = detail::restrict_support(wt, reached, tr);
      for (int c : gone)
        ctx.outcome.eliminations.push_back({Stage::stage1, ctx.component, it,
                                            detail::to_host(comp, jt.cliques[static_cast<std::size_t>(c)]),
                                            EliminationRule::upstream_of_ancestor});
      ctx.outcome.iterations.push_back(tr);
      DirectedSubJunctionTree sjt;
      std::sort(order.begin(), order.end());
      for (int c : order) {
        sjt.cliques.push_back(c);
        sjt.parent.push_back(std::max(parent[static_cast<std::size_t>(c)], -1));
      }
      sjt.root = cc;
      return sjt;
    }

    for (std::size_t i = 0; i < nb.size(); ++i)
      if (!down[i])
        for (int x : branch(jt.tree, cc, nb[i])) keep[static_cast<std::size_t>(x)] = 1;
    const auto gone = detail::restrict_support(wt, keep, tr);
    for (int c : gone)
      ctx.outcome.eliminations.push_back({Stage::stage1, ctx.component, it,
                                          detail::to_host(comp, jt.cliques[static_cast<std::size_t>(c)]),
                                          EliminationRule::downstream_of_non_ancestor});
    ctx.outcome.iterations.push_back(tr);
  }
  return std::nullopt;
}

/// Stage 2 at clique granularity. Returns a clique index of `jt`.
inline std::optional<int> find_key_clique(SearchContext& ctx, const Subgraph& comp, const JunctionTree& jt,
                                          const DirectedSubJunctionTree& sjt) {
  Environment& env = ctx.env;
  env.set_stage(Stage::stage2);
  const int m = static_cast<int>(sjt.cliques.size());
  if (m == 0) return std::nullopt;
  UndirectedGraph g(m);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(m));
  std::vector<int> parent(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    const int p = sjt.parent[static_cast<std::size_t>(i)];
    if (p < 0) continue;
    const int j = sjt.index(p);
    parent[static_cast<std::size_t>(i)] = j;
    g.add_edge(i, j);
    children[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& c : children) std::sort(c.begin(), c.end());
  auto host_clique = [&](int local) {
    return detail::to_host(comp, jt.cliques[static_cast<std::size_t>(sjt.cliques[static_cast<std::size_t>(local)])]);
  };
  WeightedTree wt = WeightedTree::uniform(g);
  const int cap = detail::iteration_cap(m);

  for (int it = 0; it < cap; ++it) {
    const auto sup = detail::support(wt);
    if (sup.size() == 1) return sjt.cliques[static_cast<std::size_t>(sup.front())];
    if (sup.empty()) return std::nullopt;
    const int cc = find_central_node(wt);
    const auto central = host_clique(cc);
    const auto blocks = clique_intervention(ctx, central);
    const bool down = detail::any_gap(ctx, blocks);

    IterationTrace tr{Stage::stage2, ctx.component, it, central, 0, 0, 0, down};
    std::vector<char> keep(static_cast<std::size_t>(m), 0);
    if (!down) {
      const int p = parent[static_cast<std::size_t>(cc)];
      if (p >= 0)
        for (int x : branch(g, cc, p)) keep[static_cast<std::size_t>(x)] = 1;
      const auto gone = detail::restrict_support(wt, keep, tr);
      for (int c : gone)
        ctx.outcome.eliminations.push_back({Stage::stage2, ctx.component, it, host_clique(c),
                                            EliminationRule::downstream_of_non_ancestor});
      ctx.outcome.iterations.push_back(tr);
      continue;
    }

    // Either the last ancestor in the central clique is X_R, or X_R sits
    // behind a separator containing it. A neighbour confirms its branch when
    // one of its private nodes moves the reward without moving that node.
    const auto reading = detail::read_clique(ctx, blocks);
    std::vector<int> candidates;
    for (int y : g.neighbors(cc)) {
      const auto br = branch(g, cc, y);
      const bool live = std::any_of(br.begin(), br.end(), [&](int x) { return wt.q[static_cast<std::size_t>(x)] > 0; });
      if (live && detail::meets(intersect(central, host_clique(y)), reading.last)) candidates.push_back(y);
    }
    int reward_child = -1;
    for (int y : candidates) {
      const auto cy = host_clique(y);
      std::vector<int> gap, into;
      for (const auto& blk : clique_intervention(ctx, cy)) {
        const int z = blk.action.node();
        if (std::binary_search(central.begin(), central.end(), z)) continue;
        if (detail::reward_gap(ctx, blk)) gap.push_back(z);
        for (int l : reading.last)
          if (std::binary_search(cy.begin(), cy.end(), l) && detail::effect_on(ctx, blk, l)) into.push_back(z);
      }
      const bool confirmed =
          std::any_of(gap.begin(), gap.end(), [&](int z) { return std::find(into.begin(), into.end(), z) == into.end(); });
      if (confirmed) {
        reward_child = y;
        break;
      }
    }
    // a single candidate is safe to enter unconfirmed: it holds the last
    // ancestor too
    if (reward_child < 0 && candidates.size() == 1) reward_child = candidates.front();
    if (reward_child < 0) {
      tr.support_before = tr.support_after = static_cast<int>(sup.size());
      ctx.outcome.iterations.push_back(tr);
      return sjt.cliques[static_cast<std::size_t>(cc)];
    }
    for (int x : branch(g, cc, reward_child)) keep[static_cast<std::size_t>(x)] = 1;
    std::vector<char> upstream(static_cast<std::size_t>(m), 0);
    upstream[static_cast<std::size_t>(cc)] = 1;
    if (parent[static_cast<std::size_t>(cc)] >= 0)
      for (int x : branch(g, cc, parent[static_cast<std::size_t>(cc)])) upstream[static_cast<std::size_t>(x)] = 1;
    const auto gone = detail::restrict_support(wt, keep, tr);
    for (int c : gone)
      ctx.outcome.eliminations.push_back({Stage::stage2, ctx.component, it, host_clique(c),
                                          upstream[static_cast<std::size_t>(c)] ? EliminationRule::upstream_of_ancestor
                                                                                : EliminationRule::not_in_reward_branch});
    ctx.outcome.iterations.push_back(tr);
  }
  const auto sup = detail::support(wt);
  if (sup.size() == 1) return sjt.cliques[static_cast<std::size_t>(sup.front())];
  return std::nullopt;
}

/// Worst-case pre-stage-3 interventions on a general instance, in the two
/// accountings (log2 n, and log2 of the clique counts).
struct GeneralBudget {
  double by_nodes = 0;
  double by_cliques = 0;
};

inline GeneralBudget general_budget(const CausalInstance& inst, int K, std::int64_t B) {
  const auto comps = chain_components(essential_graph(inst.dag()));
  const int xr = inst.reward().node;
  int omega_sum = 0, omega_r = 1, degree_r = 0;
  double clique_terms = 0;
  double cliques_r = 1;
  for (const auto& c : comps) {
    const JunctionTree jt = clique_tree(c.graph);
    const int w = clique_number(jt.cliques);
    omega_sum += w;
    clique_terms += static_cast<double>(K) * static_cast<double>(B) * w * std::log2(static_cast<double>(jt.size()));
    if (c.local(xr) >= 0) {
      omega_r = w;
      degree_r = jt.tree.max_degree();
      cliques_r = jt.size();
    }
  }
  GeneralBudget gb;
  gb.by_nodes = general_budget_bound(inst.size(), K, B, omega_r, degree_r, omega_sum);
  gb.by_cliques = static_cast<double>(B) + clique_terms +
                  (1.0 + degree_r) * K * static_cast<double>(B) * omega_r * std::log2(cliques_r);
  return gb;
}

/// CN-UCB for general graphs with chordal chain components.
inline RunLog cn_ucb_general(const CausalInstance& inst, const AlgoConfig& cfg, std::uint64_t seed) {
  detail::check_config(inst, cfg);
  Environment env(inst, seed, cfg.horizon);
  StageOutcome out;
  out.algorithm = "cn-ucb-general";
  out.budget = resolve_budget(cfg, inst.size());
  const GeneralBudget gb = general_budget(inst, cfg.K, out.budget);
  out.budget_cap = std::max(gb.by_nodes, gb.by_cliques);
  out.budget_cap_cliques = gb.by_cliques;
  SearchContext ctx{env, out.budget, cfg.margins, 0.0, out, 0};
  const auto comps = chain_components(env.essential());
  std::optional<std::vector<int>> key;
  try {
    ctx.reward_estimate = detail::observe(ctx);
    for (std::size_t c = 0; c < comps.size() && !key; ++c) {
      ctx.component = static_cast<int>(c);
      const JunctionTree jt = clique_tree(comps[c].graph);
      auto sjt = find_sub_junction_tree(ctx, comps[c], jt);
      if (!sjt) continue;
      if (auto ci = find_key_clique(ctx, comps[c], jt, *sjt))
        key = detail::to_host(comps[c], jt.cliques[static_cast<std::size_t>(*ci)]);
    }
  } catch (const detail::OutOfRounds&) {
    return detail::close(env, std::move(out));
  }
  out.identified_clique = key;
  detail::finish_with_ucb(env, out, key);
  return detail::close(env, std::move(out));
}

/// Algorithm dispatch by harness id.
inline RunLog run_algorithm(const std::string& algo, const CausalInstance& inst, const AlgoConfig& cfg,
                            std::uint64_t seed) {
  if (algo == "cn-ucb-tree") return cn_ucb_tree(inst, cfg, seed);
  if (algo == "cn-ucb-forest") return cn_ucb_forest(inst, cfg, seed);
  if (algo == "cn-ucb-general") return cn_ucb_general(inst, cfg, seed);
  if (algo == "ucb-full") {
    if (cfg.horizon < 1) throw InvalidConfig("horizon must be at least 1");
    return ucb_full(inst, seed, cfg.horizon);
  }
  throw ConfigError("unknown algorithm '" + algo + "'");
}

}  // namespace cbandit
