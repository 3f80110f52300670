#pragma once

// Brute-force references used by the tests. Each one recomputes a library
// result from first principles, sharing no code with the library beyond the
// plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "cbandit/cbandit.hpp"

namespace oracle {

using cbandit::CausalDag;
using cbandit::CausalInstance;
using cbandit::Cpt;
using cbandit::Intervention;
using cbandit::UndirectedGraph;
using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Random structures
// ---------------------------------------------------------------------------

/// DAG over a random order with independent edges of probability p, at most
/// `max_parents` parents per node.
inline CausalDag random_dag(int n, double p, Rng& rng, int max_parents = 3) {
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(p);
  CausalDag dag(n);
  for (int j = 1; j < n; ++j) {
    int parents = 0;
    for (int i = 0; i < j && parents < max_parents; ++i)
      if (coin(rng)) {
        dag.add_edge(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        ++parents;
      }
  }
  return dag;
}

inline std::vector<double> random_row(int k, Rng& rng, bool allow_zero) {
  std::gamma_distribution<double> g(0.7, 1.0);
  std::vector<double> r(static_cast<std::size_t>(k));
  double s = 0;
  for (auto& x : r) s += (x = g(rng) + 1e-6);
  for (auto& x : r) x /= s;
  if (allow_zero && k > 1 && std::bernoulli_distribution(0.15)(rng)) {
    const int z = std::uniform_int_distribution<int>(0, k - 1)(rng);
    const double m = r[static_cast<std::size_t>(z)];
    r[static_cast<std::size_t>(z)] = 0;
    auto& y = r[static_cast<std::size_t>((z + 1) % k)];
    y = std::min(1.0, y + m);
  }
  return r;
}

/// Random instance over `dag` with domains in [2, max_domain].
inline CausalInstance random_instance(const CausalDag& dag, Rng& rng, int max_domain = 3) {
  const int n = dag.size();
  std::vector<int> dom(static_cast<std::size_t>(n));
  for (auto& d : dom) d = std::uniform_int_distribution<int>(2, max_domain)(rng);
  std::vector<Cpt> cpts;
  for (int v = 0; v < n; ++v) {
    Cpt c;
    c.node = v;
    c.domain_size = dom[static_cast<std::size_t>(v)];
    c.parents = dag.parents(v);
    std::shuffle(c.parents.begin(), c.parents.end(), rng);
    for (int p : c.parents) c.parent_domains.push_back(dom[static_cast<std::size_t>(p)]);
    for (std::size_t r = 0; r < c.rows(); ++r) {
      const auto row = random_row(c.domain_size, rng, true);
      c.table.insert(c.table.end(), row.begin(), row.end());
    }
    cpts.push_back(std::move(c));
  }
  const int xr = std::uniform_int_distribution<int>(0, n - 1)(rng);
  std::vector<double> means(static_cast<std::size_t>(dom[static_cast<std::size_t>(xr)]));
  for (auto& m : means) m = std::uniform_real_distribution<double>(0, 1)(rng);
  const int min_dom = *std::min_element(dom.begin(), dom.end());
  return CausalInstance(dag, std::move(cpts), {xr, means}, cbandit::ActionDomain{0, min_dom});
}

inline UndirectedGraph random_tree(int n, Rng& rng) {
  UndirectedGraph t(n);
  for (int v = 1; v < n; ++v) t.add_edge(v, std::uniform_int_distribution<int>(0, v - 1)(rng));
  // relabel so that low indices are not always near the root
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  UndirectedGraph out(n);
  for (auto [u, v] : t.edges()) out.add_edge(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
  return out;
}

/// Chordal graph by repeatedly attaching a new vertex to a random clique
/// (of size at most max_clique - 1) of the graph built so far.
inline UndirectedGraph random_chordal(int n, int max_clique, Rng& rng) {
  UndirectedGraph g(n);
  std::vector<std::vector<int>> cliques;
  for (int v = 0; v < n; ++v) {
    if (v == 0 || std::bernoulli_distribution(0.08)(rng)) {
      cliques.push_back({v});
      continue;
    }
    const auto& base = cliques[std::uniform_int_distribution<std::size_t>(0, cliques.size() - 1)(rng)];
    std::vector<int> pick = base;
    std::shuffle(pick.begin(), pick.end(), rng);
    const int k = std::uniform_int_distribution<int>(1, std::min<int>(max_clique - 1, static_cast<int>(pick.size())))(rng);
    pick.resize(static_cast<std::size_t>(k));
    for (int u : pick) g.add_edge(u, v);
    pick.push_back(v);
    std::sort(pick.begin(), pick.end());
    cliques.push_back(pick);
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  UndirectedGraph out(n);
  for (auto [u, v] : g.edges()) out.add_edge(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
  return out;
}

/// A DAG with no v-structures over a connected chordal skeleton: orient
/// along a perfect elimination order reversed (parents come earlier).
inline CausalDag moral_dag_from_chordal(const UndirectedGraph& g) {
  // maximum cardinality search yields an order whose reverse is a PEO
  const int n = g.size();
  std::vector<int> weight(static_cast<std::size_t>(n), 0), pos(static_cast<std::size_t>(n), -1);
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v)
      if (pos[static_cast<std::size_t>(v)] < 0 && (best < 0 || weight[static_cast<std::size_t>(v)] > weight[static_cast<std::size_t>(best)]))
        best = v;
    pos[static_cast<std::size_t>(best)] = step;
    for (int w : g.neighbors(best)) ++weight[static_cast<std::size_t>(w)];
  }
  CausalDag dag(n);
  for (auto [u, v] : g.edges()) {
    if (pos[static_cast<std::size_t>(u)] < pos[static_cast<std::size_t>(v)])
      dag.add_edge(u, v);
    else
      dag.add_edge(v, u);
  }
  return dag;
}

// ---------------------------------------------------------------------------
// Inference by full joint enumeration
// ---------------------------------------------------------------------------

/// P(target | do(a)) summed over every joint assignment.
inline std::vector<double> joint_marginal(const CausalInstance& inst, const Intervention& a, int target) {
  const int n = inst.size();
  std::vector<double> out(static_cast<std::size_t>(inst.domain(target)), 0.0);
  std::vector<int> x(static_cast<std::size_t>(n), 0);
  for (;;) {
    double p = 1.0;
    for (int v = 0; v < n && p > 0; ++v) {
      const int xv = x[static_cast<std::size_t>(v)];
      if (!a.empty() && a.node() == v) {
        p *= xv == a.value() ? 1.0 : 0.0;
        continue;
      }
      const Cpt& c = inst.cpt(v);
      std::size_t r = 0;
      for (std::size_t i = 0; i < c.parents.size(); ++i)
        r = r * static_cast<std::size_t>(c.parent_domains[i]) + static_cast<std::size_t>(x[static_cast<std::size_t>(c.parents[i])]);
      p *= c.table[r * static_cast<std::size_t>(c.domain_size) + static_cast<std::size_t>(xv)];
    }
    out[static_cast<std::size_t>(x[static_cast<std::size_t>(target)])] += p;
    int v = 0;
    while (v < n && ++x[static_cast<std::size_t>(v)] == inst.domain(v)) x[static_cast<std::size_t>(v++)] = 0;
    if (v == n) break;
  }
  return out;
}

inline double joint_expected_reward(const CausalInstance& inst, const Intervention& a) {
  const auto m = joint_marginal(inst, a, inst.reward().node);
  double s = 0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * inst.reward().value_means[i];
  return s;
}

// ---------------------------------------------------------------------------
// Markov equivalence class by orientation enumeration
// ---------------------------------------------------------------------------

inline std::set<std::tuple<int, int, int>> v_structures(int n, const std::vector<std::pair<int, int>>& directed) {
  std::vector<std::vector<int>> pa(static_cast<std::size_t>(n));
  std::set<std::pair<int, int>> adj;
  for (auto [p, c] : directed) {
    pa[static_cast<std::size_t>(c)].push_back(p);
    adj.insert({std::min(p, c), std::max(p, c)});
  }
  std::set<std::tuple<int, int, int>> out;
  for (int c = 0; c < n; ++c)
    for (int a : pa[static_cast<std::size_t>(c)])
      for (int b : pa[static_cast<std::size_t>(c)])
        if (a < b && !adj.count({a, b})) out.insert({a, c, b});
  return out;
}

inline bool acyclic(int n, const std::vector<std::pair<int, int>>& directed) {
  std::vector<int> indeg(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> ch(static_cast<std::size_t>(n));
  for (auto [p, c] : directed) {
    ch[static_cast<std::size_t>(p)].push_back(c);
    ++indeg[static_cast<std::size_t>(c)];
  }
  std::vector<int> ready;
  for (int v = 0; v < n; ++v)
    if (!indeg[static_cast<std::size_t>(v)]) ready.push_back(v);
  int seen = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++seen;
    for (int c : ch[static_cast<std::size_t>(v)])
      if (!--indeg[static_cast<std::size_t>(c)]) ready.push_back(c);
  }
  return seen == n;
}

struct Cpdag {
  std::set<std::pair<int, int>> directed;
  std::set<std::pair<int, int>> undirected;  // (u < v)
};

/// Edges oriented identically in every DAG of the equivalence class are
/// directed; the rest are undirected.
inline Cpdag mec_cpdag(const CausalDag& dag) {
  const int n = dag.size();
  const auto edges = dag.edges();
  const auto target = v_structures(n, edges);
  const std::size_t m = edges.size();
  std::vector<int> forward(m, 0), backward(m, 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    std::vector<std::pair<int, int>> d;
    for (std::size_t i = 0; i < m; ++i) {
      auto [u, v] = edges[i];
      d.push_back((mask >> i) & 1 ? std::pair{v, u} : std::pair{u, v});
    }
    if (!acyclic(n, d) || v_structures(n, d) != target) continue;
    for (std::size_t i = 0; i < m; ++i) ((mask >> i) & 1 ? backward : forward)[i] = 1;
  }
  Cpdag out;
  for (std::size_t i = 0; i < m; ++i) {
    auto [u, v] = edges[i];
    if (forward[i] && backward[i])
      out.undirected.insert({std::min(u, v), std::max(u, v)});
    else
      out.directed.insert(forward[i] ? std::pair{u, v} : std::pair{v, u});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cliques, junction trees and clique graphs
// ---------------------------------------------------------------------------

/// Maximal cliques by enumerating every vertex subset.
inline std::vector<std::vector<int>> subset_maximal_cliques(const UndirectedGraph& g) {
  const int n = g.size();
  auto is_clique = [&](std::uint32_t s) {
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if ((s >> u & 1) && (s >> v & 1) && !g.has_edge(u, v)) return false;
    return true;
  };
  std::vector<std::uint32_t> cl;
  for (std::uint32_t s = 1; s < (1u << n); ++s)
    if (is_clique(s)) cl.push_back(s);
  std::vector<std::vector<int>> out;
  for (std::uint32_t s : cl) {
    bool maximal = true;
    for (int v = 0; v < n && maximal; ++v)
      if (!(s >> v & 1) && is_clique(s | (1u << v))) maximal = false;
    if (!maximal) continue;
    std::vector<int> c;
    for (int v = 0; v < n; ++v)
      if (s >> v & 1) c.push_back(v);
    out.push_back(c);
  }
  if (n == 0) return out;
  std::sort(out.begin(), out.end());
  return out;
}

inline bool contains(const std::vector<int>& c, int v) { return std::find(c.begin(), c.end(), v) != c.end(); }

/// For every host node, the tree nodes whose clique contains it are connected.
inline bool junction_property(const std::vector<std::vector<int>>& cliques, const std::vector<std::pair<int, int>>& tree_edges,
                              int host_nodes) {
  const int m = static_cast<int>(cliques.size());
  for (int v = 0; v < host_nodes; ++v) {
    std::vector<int> members;
    for (int i = 0; i < m; ++i)
      if (contains(cliques[static_cast<std::size_t>(i)], v)) members.push_back(i);
    if (members.size() <= 1) continue;
    std::vector<int> seen(static_cast<std::size_t>(m), 0), stack{members[0]};
    seen[static_cast<std::size_t>(members[0])] = 1;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      for (auto [x, y] : tree_edges) {
        const int b = x == a ? y : (y == a ? x : -1);
        if (b < 0 || seen[static_cast<std::size_t>(b)] || !contains(cliques[static_cast<std::size_t>(b)], v)) continue;
        seen[static_cast<std::size_t>(b)] = 1;
        stack.push_back(b);
      }
    }
    for (int i : members)
      if (!seen[static_cast<std::size_t>(i)]) return false;
  }
  return true;
}

inline bool spanning_tree(int m, const std::vector<std::pair<int, int>>& edges) {
  if (static_cast<int>(edges.size()) != m - 1) return false;
  std::vector<int> parent(static_cast<std::size_t>(m));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[static_cast<std::size_t>(x)] == x ? x : parent[static_cast<std::size_t>(x)] = find(parent[static_cast<std::size_t>(x)]); };
  for (auto [a, b] : edges) {
    const int ra = find(a), rb = find(b);
    if (ra == rb) return false;
    parent[static_cast<std::size_t>(ra)] = rb;
  }
  return true;
}

/// Union of the edges of every spanning tree (over intersecting clique
/// pairs) that has the junction property.
inline std::set<std::pair<int, int>> clique_tree_union(const std::vector<std::vector<int>>& cliques, int host_nodes) {
  const int m = static_cast<int>(cliques.size());
  std::vector<std::pair<int, int>> cand;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      std::vector<int> s;
      std::set_intersection(cliques[static_cast<std::size_t>(a)].begin(), cliques[static_cast<std::size_t>(a)].end(),
                            cliques[static_cast<std::size_t>(b)].begin(), cliques[static_cast<std::size_t>(b)].end(),
                            std::back_inserter(s));
      if (!s.empty()) cand.push_back({a, b});
    }
  std::set<std::pair<int, int>> out;
  const std::size_t k = static_cast<std::size_t>(std::max(m - 1, 0));
  if (k == 0 || cand.size() < k) return out;
  std::vector<int> pick(cand.size(), 0);
  std::fill(pick.end() - static_cast<std::ptrdiff_t>(k), pick.end(), 1);
  do {
    std::vector<std::pair<int, int>> e;
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (pick[i]) e.push_back(cand[i]);
    if (spanning_tree(m, e) && junction_property(cliques, e, host_nodes)) out.insert(e.begin(), e.end());
  } while (std::next_permutation(pick.begin(), pick.end()));
  return out;
}

/// Adjacent clique-graph edge pairs with strictly nested intersections.
inline bool comparable_pair_exists(const cbandit::CliqueGraph& cg) {
  const int m = static_cast<int>(cg.cliques.size());
  auto inter = [&](int a, int b) {
    std::vector<int> s;
    std::set_intersection(cg.cliques[static_cast<std::size_t>(a)].begin(), cg.cliques[static_cast<std::size_t>(a)].end(),
                          cg.cliques[static_cast<std::size_t>(b)].begin(), cg.cliques[static_cast<std::size_t>(b)].end(),
                          std::back_inserter(s));
    return s;
  };
  for (int b = 0; b < m; ++b)
    for (int a : cg.graph.neighbors(b))
      for (int c : cg.graph.neighbors(b)) {
        if (a == c) continue;
        const auto s1 = inter(a, b), s2 = inter(b, c);
        if (s1.size() < s2.size() && std::includes(s2.begin(), s2.end(), s1.begin(), s1.end())) return true;
      }
  return false;
}

// ---------------------------------------------------------------------------
// Trees and budgets
// ---------------------------------------------------------------------------

/// Largest total q over the connected pieces of tree - v.
inline double brute_max_branch(const UndirectedGraph& t, const std::vector<double>& q, int v) {
  const int n = t.size();
  std::vector<int> seen(static_cast<std::size_t>(n), 0);
  seen[static_cast<std::size_t>(v)] = 1;
  double best = 0;
  for (int y : t.neighbors(v)) {
    double s = 0;
    std::vector<int> stack{y};
    seen[static_cast<std::size_t>(y)] = 1;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      s += q[static_cast<std::size_t>(a)];
      for (int b : t.neighbors(a))
        if (!seen[static_cast<std::size_t>(b)]) {
          seen[static_cast<std::size_t>(b)] = 1;
          stack.push_back(b);
        }
    }
    best = std::max(best, s);
  }
  const double total = std::accumulate(q.begin(), q.end(), 0.0);
  return total > 0 ? best / total : 0.0;
}

/// Closed-form budget, written out independently of the library.
inline std::int64_t budget(int n, int K, double delta, double eps, double gap) {
  const double a = 32.0 / (gap * gap) * std::log(8.0 * n * K / delta);
  const double b = 2.0 / (eps * eps) * std::log(8.0 * n * n * K * K / delta);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(std::max(a, b))));
}

}  // namespace oracle
