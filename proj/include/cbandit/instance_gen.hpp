#pragma once

// Ground-truth instance generators: random causal trees, forests and moral
// DAGs with chordal skeletons (margins enforced by rejection), a fixed
// walkthrough tree, and the deterministic lower-bound chain families.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "causal_model.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace cbandit {

struct GeneratorSpec {
  std::string family = "tree";  // tree | binary_tree | forest | chordal | lower_bound_thm4 | lower_bound_thm5 | figure1
  int n = 7;
  int K = 2;
  int max_degree = 0;  // 0 = unbounded
  int components = 3;  // forests
  AssumptionMargins margins{0.3, 0.3};
  std::uint64_t seed = 0;
  int max_clique = 3;  // chordal: clique number bound
  bool proper_interval = false;
  bool require_incomparable = true;
  std::int64_t T = 10000;  // lower-bound families
  int index = 0;
  int attempts = 10000;
};

struct GroundTruth {
  int reward_node = 0;
  std::vector<std::pair<int, int>> edges;  // true directions
  int max_degree = 0;
  int depth = 0;  // longest root-to-node path (edges)
  std::vector<std::vector<int>> components;
  std::vector<std::vector<int>> cliques;
  JunctionTree directed_clique_tree;  // chordal family, host indices
  bool intersection_incomparable = true;
  int reward_clique_size = 0;  // largest maximal clique containing X_R
  int attempts_used = 0;
};

struct GeneratedInstance {
  CausalInstance instance;
  GroundTruth truth;
};

namespace detail {

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Uniform labelled tree on n nodes via a random Prufer sequence.
inline UndirectedGraph prufer_tree(int n, Rng& rng) {
  UndirectedGraph g(n);
  if (n <= 1) return g;
  if (n == 2) {
    g.add_edge(0, 1);
    return g;
  }
  std::vector<int> seq(static_cast<std::size_t>(n - 2));
  for (int& s : seq) s = uniform_int(rng, 0, n - 1);
  std::vector<int> degree(static_cast<std::size_t>(n), 1);
  for (int s : seq) ++degree[static_cast<std::size_t>(s)];
  for (int s : seq) {
    int leaf = 0;
    while (degree[static_cast<std::size_t>(leaf)] != 1) ++leaf;
    g.add_edge(leaf, s);
    --degree[static_cast<std::size_t>(leaf)];
    --degree[static_cast<std::size_t>(s)];
  }
  int u = -1, v = -1;
  for (int i = 0; i < n; ++i)
    if (degree[static_cast<std::size_t>(i)] == 1) (u < 0 ? u : v) = i;
  g.add_edge(u, v);
  return g;
}

/// Orients `tree` away from `root`, writing edges into dag (node ids mapped
/// through `label`). Returns the depth.
inline int orient_tree(const UndirectedGraph& tree, int root, std::span<const int> label, CausalDag& dag) {
  std::vector<int> depth(static_cast<std::size_t>(tree.size()), -1);
  depth[static_cast<std::size_t>(root)] = 0;
  std::vector<int> order{root};
  int deepest = 0;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (int w : tree.neighbors(order[i]))
      if (depth[static_cast<std::size_t>(w)] < 0) {
        depth[static_cast<std::size_t>(w)] = depth[static_cast<std::size_t>(order[i])] + 1;
        deepest = std::max(deepest, depth[static_cast<std::size_t>(w)]);
        dag.add_edge(label[static_cast<std::size_t>(order[i])], label[static_cast<std::size_t>(w)]);
        order.push_back(w);
      }
  return deepest;
}

inline int dag_depth(const CausalDag& dag) {
  std::vector<int> d(static_cast<std::size_t>(dag.size()), 0);
  int best = 0;
  for (int v : topological_order(dag))
    for (int p : dag.parents(v)) {
      d[static_cast<std::size_t>(v)] = std::max(d[static_cast<std::size_t>(v)], d[static_cast<std::size_t>(p)] + 1);
      best = std::max(best, d[static_cast<std::size_t>(v)]);
    }
  return best;
}

inline std::vector<double> dirichlet_row(int K, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> r(static_cast<std::size_t>(K));
  double s = 0;
  for (double& x : r) s += (x = e(rng));
  for (double& x : r) x /= s;
  return r;
}

/// Deterministic in (dag, K, margins, rng). CPT rows are drawn from the
/// simplex and sharpened toward a random vertex until each incoming edge
/// carries an effect above the margin. `floor` is the initial sharpness.
/// Returns nullopt when some node exhausts its redraw budget.
inline std::optional<std::vector<Cpt>> sample_cpts(const CausalDag& dag, int K, double epsilon, double floor, Rng& rng,
                                                    int redraws = 40) {
  const int n = dag.size();
  const auto order = topological_order(dag);
  std::vector<Cpt> cpts(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    Cpt& c = cpts[static_cast<std::size_t>(v)];
    c.node = v;
    c.domain_size = K;
    c.parents = topological_parent_order(dag, v, order);
    c.parent_domains.assign(c.parents.size(), K);
    c.table.assign(c.rows() * static_cast<std::size_t>(K), 0.0);
    for (std::size_t r = 0; r < c.rows(); ++r) c.table[r * static_cast<std::size_t>(K)] = 1.0;
  }
  // placeholder reward: only marginals of already processed ancestors matter
  RewardModel placeholder{0, std::vector<double>(static_cast<std::size_t>(K), 0.0)};

  constexpr int kSteps = 12;
  constexpr double kMaxSharp = 0.97;
  for (int v : order) {
    Cpt c;
    c.node = v;
    c.domain_size = K;
    c.parents = topological_parent_order(dag, v, order);
    c.parent_domains.assign(c.parents.size(), K);
    const std::size_t rows = c.rows();
    bool accepted = false;
    for (int r = 0; r < redraws && !accepted; ++r) {
      std::vector<std::vector<double>> base(rows);
      std::vector<int> target(rows);
      for (std::size_t i = 0; i < rows; ++i) {
        base[i] = dirichlet_row(K, rng);
        target[i] = uniform_int(rng, 0, K - 1);
      }
      for (int step = 0; step <= kSteps && !accepted; ++step) {
        const double lambda = floor + (kMaxSharp - floor) * step / kSteps;
        c.table.assign(rows * static_cast<std::size_t>(K), 0.0);
        for (std::size_t i = 0; i < rows; ++i)
          for (int x = 0; x < K; ++x)
            c.table[i * static_cast<std::size_t>(K) + static_cast<std::size_t>(x)] =
                (1 - lambda) * base[i][static_cast<std::size_t>(x)] + (x == target[i] ? lambda : 0.0);
        if (c.parents.empty()) {
          accepted = true;
          break;
        }
        cpts[static_cast<std::size_t>(v)] = c;
        const CausalInstance partial(dag, cpts, placeholder);
        const auto obs = exact_marginal(partial, Intervention::none(), v);
        bool ok = true;
        for (int p : c.parents) {
          double best = 0;
          for (int xp = 0; xp < K; ++xp) {
            const auto post = exact_marginal(partial, Intervention::set(p, xp), v);
            for (int x = 0; x < K; ++x)
              best = std::max(best, std::abs(post[static_cast<std::size_t>(x)] - obs[static_cast<std::size_t>(x)]));
          }
          if (!(best > epsilon)) {
            ok = false;
            break;
          }
        }
        accepted = ok;
      }
    }
    if (!accepted) return std::nullopt;
    cpts[static_cast<std::size_t>(v)] = std::move(c);
  }
  return cpts;
}

inline RewardModel spread_reward(int node, int K, Rng& rng) {
  RewardModel rm{node, std::vector<double>(static_cast<std::size_t>(K))};
  for (int k = 0; k < K; ++k) rm.value_means[static_cast<std::size_t>(k)] = K == 1 ? 0.5 : static_cast<double>(k) / (K - 1);
  std::shuffle(rm.value_means.begin(), rm.value_means.end(), rng);
  return rm;
}

inline std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Shared rejection loop: `structure(rng, truth)` proposes a DAG (or
/// nullopt to reject); CPTs and the reward are then drawn and the full
/// instance is validated against the margins.
template <class Structure>
GeneratedInstance rejection_sample(const GeneratorSpec& spec, std::uint64_t family_tag, Structure&& structure) {
  if (spec.n < 1) throw InvalidConfig("n must be at least 1");
  if (spec.K < 2) throw InvalidConfig("K must be at least 2");
  spec.margins.validate();
  Rng rng(mix_seed({family_tag, spec.seed, static_cast<std::uint64_t>(spec.n), static_cast<std::uint64_t>(spec.K)}));
  for (int attempt = 0; attempt < spec.attempts; ++attempt) {
    GroundTruth truth;
    std::optional<CausalDag> dag = structure(rng, truth);
    if (!dag) continue;
    const double floor = std::min(0.9, 0.3 + 0.01 * attempt);
    auto cpts = sample_cpts(*dag, spec.K, spec.margins.epsilon_margin, floor, rng);
    if (!cpts) continue;
    const int xr = uniform_int(rng, 0, spec.n - 1);
    CausalInstance inst(*dag, std::move(*cpts), spread_reward(xr, spec.K, rng));
    if (!validate_assumptions(inst, spec.margins).passed()) continue;
    truth.reward_node = xr;
    truth.edges = inst.dag().edges();
    truth.max_degree = skeleton(inst.dag()).max_degree();
    truth.depth = dag_depth(inst.dag());
    truth.attempts_used = attempt + 1;
    return {std::move(inst), std::move(truth)};
  }
  throw GenerationTimeout("no instance satisfied the margins within " + std::to_string(spec.attempts) + " attempts");
}

}  // namespace detail

/// Uniform random labelled tree rooted at a random node.
inline GeneratedInstance generate_tree_instance(const GeneratorSpec& spec) {
  return detail::rejection_sample(spec, fnv1a("tree"), [&](Rng& rng, GroundTruth& truth) -> std::optional<CausalDag> {
    UndirectedGraph t = detail::prufer_tree(spec.n, rng);
    if (spec.max_degree > 0 && t.max_degree() > spec.max_degree) return std::nullopt;
    std::vector<int> id(static_cast<std::size_t>(spec.n));
    std::iota(id.begin(), id.end(), 0);
    CausalDag dag(spec.n);
    detail::orient_tree(t, detail::uniform_int(rng, 0, spec.n - 1), id, dag);
    truth.components = {id};
    return dag;
  });
}

/// Complete binary tree in heap order (node i has children 2i+1, 2i+2)
/// rooted at node 0; nodes are randomly relabelled.
inline GeneratedInstance generate_binary_tree_instance(const GeneratorSpec& spec) {
  return detail::rejection_sample(spec, fnv1a("binary_tree"), [&](Rng& rng, GroundTruth& truth) -> std::optional<CausalDag> {
    const auto label = detail::random_permutation(spec.n, rng);
    CausalDag dag(spec.n);
    for (int i = 1; i < spec.n; ++i)
      dag.add_edge(label[static_cast<std::size_t>((i - 1) / 2)], label[static_cast<std::size_t>(i)]);
    std::vector<int> all(static_cast<std::size_t>(spec.n));
    std::iota(all.begin(), all.end(), 0);
    truth.components = {all};
    return dag;
  });
}

/// `components` disconnected random trees of near-equal size over randomly
/// permuted labels.
inline GeneratedInstance generate_forest_instance(const GeneratorSpec& spec) {
  if (spec.components < 1 || spec.components > spec.n) throw InvalidConfig("component count must lie in [1, n]");
  return detail::rejection_sample(spec, fnv1a("forest"), [&](Rng& rng, GroundTruth& truth) -> std::optional<CausalDag> {
    const auto label = detail::random_permutation(spec.n, rng);
    CausalDag dag(spec.n);
    int offset = 0;
    truth.components.clear();
    for (int c = 0; c < spec.components; ++c) {
      const int size = spec.n / spec.components + (c < spec.n % spec.components ? 1 : 0);
      UndirectedGraph t = detail::prufer_tree(size, rng);
      if (spec.max_degree > 0 && t.max_degree() > spec.max_degree) return std::nullopt;
      std::span<const int> ids(label.data() + offset, static_cast<std::size_t>(size));
      detail::orient_tree(t, detail::uniform_int(rng, 0, size - 1), ids, dag);
      std::vector<int> comp(ids.begin(), ids.end());
      std::sort(comp.begin(), comp.end());
      truth.components.push_back(std::move(comp));
      offset += size;
    }
    std::sort(truth.components.begin(), truth.components.end());
    return dag;
  });
}

/// Moral DAG with a connected chordal skeleton. Nodes are inserted one at a
/// time, each joined to a clique subset (size < max_clique) of an existing
/// maximal clique and oriented from earlier nodes, so every parent set is a
/// clique. With proper_interval the subset is a sliding window over the
/// insertion order, which yields a unit interval graph.
inline GeneratedInstance generate_chordal_instance(const GeneratorSpec& spec) {
  if (spec.max_clique < 2) throw InvalidConfig("max_clique must be at least 2");
  GeneratedInstance out = detail::rejection_sample(
      spec, fnv1a(spec.proper_interval ? "chordal_pi" : "chordal"), [&](Rng& rng, GroundTruth& truth) -> std::optional<CausalDag> {
        const int n = spec.n;
        const int wmax = spec.max_clique - 1;
        std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
        UndirectedGraph g(n);
        int left = 0;
        for (int v = 1; v < n; ++v) {
          std::vector<int> s;
          if (spec.proper_interval) {
            const int lo = std::max(left, v - wmax);
            left = detail::uniform_int(rng, lo, v - 1);
            for (int u = left; u < v; ++u) s.push_back(u);
          } else {
            const Subgraph sofar = induced_subgraph(g, [&] {
              std::vector<int> a(static_cast<std::size_t>(v));
              std::iota(a.begin(), a.end(), 0);
              return a;
            }());
            const auto cl = maximal_cliques(sofar.graph);
            auto c = cl[static_cast<std::size_t>(detail::uniform_int(rng, 0, static_cast<int>(cl.size()) - 1))];
            std::shuffle(c.begin(), c.end(), rng);
            const int k = detail::uniform_int(rng, 1, std::min<int>(wmax, static_cast<int>(c.size())));
            s.assign(c.begin(), c.begin() + k);
          }
          for (int u : s) g.add_edge(u, v);
          parents[static_cast<std::size_t>(v)] = s;
        }
        const auto label = detail::random_permutation(n, rng);
        CausalDag dag(n);
        for (int v = 0; v < n; ++v)
          for (int u : parents[static_cast<std::size_t>(v)])
            dag.add_edge(label[static_cast<std::size_t>(u)], label[static_cast<std::size_t>(v)]);
        const UndirectedGraph skel = skeleton(dag);
        const bool incomparable = is_intersection_incomparable(clique_graph(skel)).incomparable;
        if (spec.require_incomparable && !incomparable) return std::nullopt;
        truth.intersection_incomparable = incomparable;
        std::vector<int> all(static_cast<std::size_t>(n));
        std::iota(all.begin(), all.end(), 0);
        truth.components = {all};
        return dag;
      });
  const UndirectedGraph skel = skeleton(out.instance.dag());
  out.truth.cliques = maximal_cliques(skel);
  out.truth.directed_clique_tree = directed_clique_tree(out.instance.dag(), clique_tree(skel));
  out.truth.intersection_incomparable = is_intersection_incomparable(clique_graph(skel)).incomparable;
  for (const auto& c : out.truth.cliques)
    if (std::binary_search(c.begin(), c.end(), out.truth.reward_node))
      out.truth.reward_clique_size = std::max(out.truth.reward_clique_size, static_cast<int>(c.size()));
  return out;
}

/// The nine-node walkthrough tree (0-based ids, Xi = i-1):
///   X1 -> X2, X1 -> X3, X2 -> X4, X2 -> X5, X4 -> X8, X5 -> X9,
///   X3 -> X6, X3 -> X7, reward node X7.
/// With uniform weights the first central node is X2, the second X3.
inline GeneratedInstance generate_figure1_instance(int K, const AssumptionMargins& margins) {
  if (K < 2) throw InvalidConfig("K must be at least 2");
  margins.validate();
  CausalDag dag(9);
  for (auto [p, c] : {std::pair{1, 2}, {1, 3}, {2, 4}, {2, 5}, {4, 8}, {5, 9}, {3, 6}, {3, 7}}) dag.add_edge(p - 1, c - 1);
  Rng rng(mix_seed({fnv1a("figure1"), static_cast<std::uint64_t>(K)}));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double floor = std::min(0.9, 0.3 + 0.01 * attempt);
    auto cpts = detail::sample_cpts(dag, K, margins.epsilon_margin, floor, rng);
    if (!cpts) continue;
    CausalInstance inst(dag, std::move(*cpts), detail::spread_reward(6, K, rng));
    if (!validate_assumptions(inst, margins).passed()) continue;
    GroundTruth truth;
    truth.reward_node = 6;
    truth.edges = dag.edges();
    truth.max_degree = 3;
    truth.depth = 3;
    std::vector<int> all(9);
    std::iota(all.begin(), all.end(), 0);
    truth.components = {all};
    truth.attempts_used = attempt + 1;
    return {std::move(inst), std::move(truth)};
  }
  throw GenerationTimeout("walkthrough instance: margins unattainable");
}

// ---------------------------------------------------------------------------
// Lower-bound families
// ---------------------------------------------------------------------------

inline double lower_bound_gap(int n, int K, std::int64_t T) {
  return 0.25 * std::sqrt(static_cast<double>(n) * K / static_cast<double>(T));
}

namespace detail {

/// Chain over `path` (0-based ids, root first) with the given domain; the
/// root and every child row are produced by `root_row` / `child_row`.
template <class RootRow, class ChildRow>
CausalInstance build_chain(int n, int domain, const std::vector<int>& path, RewardModel reward, ActionDomain actions,
                           RootRow&& root_row, ChildRow&& child_row) {
  CausalDag dag(n);
  for (std::size_t i = 1; i < path.size(); ++i) dag.add_edge(path[i - 1], path[i]);
  std::vector<Cpt> cpts(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < path.size(); ++i) {
    Cpt c;
    c.node = path[i];
    c.domain_size = domain;
    if (i == 0) {
      c.table = root_row();
    } else {
      c.parents = {path[i - 1]};
      c.parent_domains = {domain};
      for (int x = 0; x < domain; ++x) {
        const auto row = child_row(x);
        c.table.insert(c.table.end(), row.begin(), row.end());
      }
    }
    cpts[static_cast<std::size_t>(path[i])] = std::move(c);
  }
  return CausalInstance(std::move(dag), std::move(cpts), std::move(reward), actions);
}

inline void check_lower_bound_args(int n, int K, std::int64_t T, int index) {
  if (n < 2) throw InvalidConfig("lower-bound chains need n >= 2");
  if (K < 1) throw InvalidConfig("K must be positive");
  if (T < 1) throw InvalidConfig("T must be positive");
  if (index < 0 || index > n * K)
    throw IndexOutOfRange("index " + std::to_string(index) + " outside [0, " + std::to_string(n * K) + "]");
}

/// Node j (1-based) and value k (1-based) encoded by index = (j-1)K + k.
inline std::pair<int, int> lower_bound_target(int K, int index) { return {(index - 1) / K + 1, (index - 1) % K + 1}; }

}  // namespace detail

/// (K+1)-ary deterministic chains; every CPT puts all mass on value 0, so no
/// edge has any causal effect. Instance (j-1)K+k rewards X_j = k with the
/// gap D = sqrt(nK/T)/4; X_j is the root of its chain.
inline CausalInstance generate_lower_bound_thm4(int n, int K, std::int64_t T, int index) {
  detail::check_lower_bound_args(n, K, T, index);
  const int domain = K + 1;
  const double gap = lower_bound_gap(n, K, T);
  std::vector<int> path;
  int reward_node = 0, reward_value = -1;
  if (index == 0 || index <= K) {
    for (int i = 0; i < n; ++i) path.push_back(i);
    if (index > 0) reward_value = index;
  } else {
    auto [j, k] = detail::lower_bound_target(K, index);
    reward_node = j - 1;
    reward_value = k;
    if (j == n) {
      for (int i = n - 1; i >= 0; --i) path.push_back(i);
    } else {
      path.push_back(j - 1);
      for (int i = 0; i < n; ++i)
        if (i != j - 1) path.push_back(i);
    }
  }
  RewardModel rm{reward_node, std::vector<double>(static_cast<std::size_t>(domain), 0.0)};
  if (reward_value >= 0) rm.value_means[static_cast<std::size_t>(reward_value)] = gap;
  auto zero = [domain] {
    std::vector<double> r(static_cast<std::size_t>(domain), 0.0);
    r[0] = 1.0;
    return r;
  };
  return detail::build_chain(n, domain, path, std::move(rm), ActionDomain{1, K}, zero, [&](int) { return zero(); });
}

/// (K+2)-ary deterministic chains propagating 0 and 1 (values >= 2 map to
/// 0); actions range over {2, ..., K+1}. Instance (j-1)K+k rewards
/// X_j = k+1; X_j is the last node of its chain.
inline CausalInstance generate_lower_bound_thm5(int n, int K, std::int64_t T, int index) {
  detail::check_lower_bound_args(n, K, T, index);
  const int domain = K + 2;
  const double gap = lower_bound_gap(n, K, T);
  std::vector<int> path;
  int reward_node = 0, reward_value = -1;
  if (index == 0 || index <= K) {
    for (int i = n - 1; i >= 0; --i) path.push_back(i);
    if (index > 0) reward_value = index + 1;
  } else {
    auto [j, k] = detail::lower_bound_target(K, index);
    reward_node = j - 1;
    reward_value = k + 1;
    // X_{j-1} -> ... -> X_1 -> X_n -> ... -> X_j
    for (int i = j - 2; i >= 0; --i) path.push_back(i);
    for (int i = n - 1; i >= j - 1; --i) path.push_back(i);
  }
  RewardModel rm{reward_node, std::vector<double>(static_cast<std::size_t>(domain), 0.0)};
  if (reward_value >= 0) rm.value_means[static_cast<std::size_t>(reward_value)] = gap;
  auto point = [domain](int v) {
    std::vector<double> r(static_cast<std::size_t>(domain), 0.0);
    r[static_cast<std::size_t>(v)] = 1.0;
    return r;
  };
  return detail::build_chain(n, domain, path, std::move(rm), ActionDomain{2, K}, [&] { return point(0); },
                             [&](int x) { return point(x == 1 ? 1 : 0); });
}

/// Dispatch on spec.family.
inline GeneratedInstance generate(const GeneratorSpec& spec) {
  auto plain = [&](CausalInstance inst) {
    GroundTruth t;
    t.reward_node = inst.reward().node;
    t.edges = inst.dag().edges();
    t.max_degree = skeleton(inst.dag()).max_degree();
    t.depth = detail::dag_depth(inst.dag());
    std::vector<int> all(static_cast<std::size_t>(inst.size()));
    std::iota(all.begin(), all.end(), 0);
    t.components = {all};
    return GeneratedInstance{std::move(inst), std::move(t)};
  };
  if (spec.family == "tree") return generate_tree_instance(spec);
  if (spec.family == "binary_tree") return generate_binary_tree_instance(spec);
  if (spec.family == "forest") return generate_forest_instance(spec);
  if (spec.family == "chordal") return generate_chordal_instance(spec);
  if (spec.family == "figure1") return generate_figure1_instance(spec.K, spec.margins);
  if (spec.family == "lower_bound_thm4") return plain(generate_lower_bound_thm4(spec.n, spec.K, spec.T, spec.index));
  if (spec.family == "lower_bound_thm5") return plain(generate_lower_bound_thm5(spec.n, spec.K, spec.T, spec.index));
  throw ConfigError("unknown generator family '" + spec.family + "'");
}

}  // namespace cbandit
