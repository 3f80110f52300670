#pragma once

// Undirected / partially directed graph machinery: skeletons, essential
// graphs, chain components, branches, central nodes, chordality, maximal
// cliques, clique trees, clique graphs and directed clique trees.

#include <algorithm>
#include <array>
#include <cstddef>
#include <deque>
#include <iterator>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "causal_model.hpp"
#include "errors.hpp"

namespace cbandit {

class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(int node_count) : adj_(static_cast<std::size_t>(node_count)) {}

  int size() const noexcept { return static_cast<int>(adj_.size()); }

  /// Idempotent; self loops are rejected.
  void add_edge(int u, int v) {
    check(u);
    check(v);
    if (u == v) throw InvalidInstance("self loop on node " + std::to_string(u));
    insert_sorted(adj_[static_cast<std::size_t>(u)], v);
    insert_sorted(adj_[static_cast<std::size_t>(v)], u);
  }

  bool has_edge(int u, int v) const {
    check(u);
    check(v);
    const auto& a = adj_[static_cast<std::size_t>(u)];
    return std::binary_search(a.begin(), a.end(), v);
  }

  const std::vector<int>& neighbors(int v) const {
    check(v);
    return adj_[static_cast<std::size_t>(v)];
  }

  int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

  int max_degree() const {
    int d = 0;
    for (const auto& a : adj_) d = std::max(d, static_cast<int>(a.size()));
    return d;
  }

  /// Edges as (u, v) with u < v, sorted.
  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int u = 0; u < size(); ++u)
      for (int v : adj_[static_cast<std::size_t>(u)])
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  std::size_t edge_count() const {
    std::size_t m = 0;
    for (const auto& a : adj_) m += a.size();
    return m / 2;
  }

  bool operator==(const UndirectedGraph&) const = default;

 private:
  static void insert_sorted(std::vector<int>& a, int v) {
    auto it = std::lower_bound(a.begin(), a.end(), v);
    if (it == a.end() || *it != v) a.insert(it, v);
  }
  void check(int v) const {
    if (v < 0 || v >= size()) throw InvalidInstance("node index " + std::to_string(v) + " out of range");
  }

  std::vector<std::vector<int>> adj_;
};

inline UndirectedGraph skeleton(const CausalDag& dag) {
  UndirectedGraph g(dag.size());
  for (auto [p, c] : dag.edges()) g.add_edge(p, c);
  return g;
}

/// Connected components, each sorted, ordered by smallest member.
inline std::vector<std::vector<int>> connected_components(const UndirectedGraph& g) {
  std::vector<int> comp(static_cast<std::size_t>(g.size()), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < g.size(); ++s) {
    if (comp[static_cast<std::size_t>(s)] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<int> stack{s};
    comp[static_cast<std::size_t>(s)] = id;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      out.back().push_back(u);
      for (int w : g.neighbors(u))
        if (comp[static_cast<std::size_t>(w)] < 0) {
          comp[static_cast<std::size_t>(w)] = id;
          stack.push_back(w);
        }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

inline bool is_connected(const UndirectedGraph& g) { return g.size() <= 1 || connected_components(g).size() == 1; }

inline bool is_tree(const UndirectedGraph& g) {
  return g.size() >= 1 && is_connected(g) && g.edge_count() == static_cast<std::size_t>(g.size() - 1);
}

/// A node subset of a host graph with its induced graph in local indices:
/// local i corresponds to host node nodes[i].
struct Subgraph {
  std::vector<int> nodes;
  UndirectedGraph graph;

  int local(int host) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), host);
    if (it == nodes.end() || *it != host) return -1;
    return static_cast<int>(it - nodes.begin());
  }
};

inline Subgraph induced_subgraph(const UndirectedGraph& g, std::vector<int> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  Subgraph s{nodes, UndirectedGraph(static_cast<int>(nodes.size()))};
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int w : g.neighbors(nodes[i])) {
      int j = s.local(w);
      if (j > static_cast<int>(i)) s.graph.add_edge(static_cast<int>(i), j);
    }
  return s;
}

// ---------------------------------------------------------------------------
// Essential graph
// ---------------------------------------------------------------------------

struct EssentialGraph {
  int node_count = 0;
  std::vector<std::pair<int, int>> directed;    // (tail, head), sorted
  std::vector<std::pair<int, int>> undirected;  // (u, v) with u < v, sorted

  UndirectedGraph undirected_part() const {
    UndirectedGraph g(node_count);
    for (auto [u, v] : undirected) g.add_edge(u, v);
    return g;
  }

  UndirectedGraph skeleton() const {
    UndirectedGraph g = undirected_part();
    for (auto [u, v] : directed) g.add_edge(u, v);
    return g;
  }

  bool operator==(const EssentialGraph&) const = default;
};

/// CPDAG of the Markov equivalence class: v-structures are oriented, then
/// Meek rules R1-R3 are applied to a fixpoint.
inline EssentialGraph essential_graph(const CausalDag& dag) {
  (void)topological_order(dag);  // throws CycleDetected
  const int n = dag.size();
  const auto N = static_cast<std::size_t>(n);
  std::vector<char> adj(N * N, 0), dir(N * N, 0);
  auto at = [N](int u, int v) { return static_cast<std::size_t>(u) * N + static_cast<std::size_t>(v); };
  for (auto [p, c] : dag.edges()) adj[at(p, c)] = adj[at(c, p)] = 1;
  auto undirected = [&](int u, int v) { return adj[at(u, v)] && !dir[at(u, v)] && !dir[at(v, u)]; };

  for (int c = 0; c < n; ++c) {
    const auto& pa = dag.parents(c);
    for (std::size_t i = 0; i < pa.size(); ++i)
      for (std::size_t j = i + 1; j < pa.size(); ++j)
        if (!adj[at(pa[i], pa[j])]) {
          dir[at(pa[i], c)] = 1;
          dir[at(pa[j], c)] = 1;
        }
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (!undirected(a, b)) continue;
        bool orient = false;
        for (int c = 0; c < n && !orient; ++c) {
          // R1: c -> a - b, c not adjacent to b
          if (dir[at(c, a)] && c != b && !adj[at(c, b)]) orient = true;
          // R2: a -> c -> b with a - b
          if (dir[at(a, c)] && dir[at(c, b)]) orient = true;
        }
        // R3: a - c -> b, a - d -> b, c and d non-adjacent
        for (int c = 0; c < n && !orient; ++c) {
          if (!undirected(a, c) || !dir[at(c, b)]) continue;
          for (int d = c + 1; d < n && !orient; ++d)
            if (undirected(a, d) && dir[at(d, b)] && !adj[at(c, d)]) orient = true;
        }
        if (orient) {
          dir[at(a, b)] = 1;
          changed = true;
        }
      }
  }

  EssentialGraph eg;
  eg.node_count = n;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (!adj[at(u, v)]) continue;
      if (dir[at(u, v)])
        eg.directed.emplace_back(u, v);
      else if (u < v && !dir[at(v, u)])
        eg.undirected.emplace_back(u, v);
    }
  return eg;
}

/// Connected components of the undirected part, ordered by smallest node.
/// Isolated nodes are singleton components.
inline std::vector<Subgraph> chain_components(const EssentialGraph& eg) {
  const UndirectedGraph u = eg.undirected_part();
  std::vector<Subgraph> out;
  for (auto& comp : connected_components(u)) out.push_back(induced_subgraph(u, std::move(comp)));
  return out;
}

// ---------------------------------------------------------------------------
// Branches and central nodes
// ---------------------------------------------------------------------------

/// Component containing y after deleting edge (v, y). Sorted.
inline std::vector<int> branch(const UndirectedGraph& tree, int v, int y) {
  if (v < 0 || y < 0 || v >= tree.size() || y >= tree.size() || !tree.has_edge(v, y))
    throw NotAnEdge("(" + std::to_string(v) + ", " + std::to_string(y) + ") is not an edge");
  std::vector<char> seen(static_cast<std::size_t>(tree.size()), 0);
  seen[static_cast<std::size_t>(v)] = seen[static_cast<std::size_t>(y)] = 1;
  std::vector<int> stack{y}, out;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    out.push_back(u);
    for (int w : tree.neighbors(u))
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        stack.push_back(w);
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct WeightedTree {
  UndirectedGraph tree;
  std::vector<double> q;

  /// Uniform weight over the given nodes (all nodes when empty).
  static WeightedTree uniform(UndirectedGraph tree, std::span<const int> support = {}) {
    WeightedTree wt{std::move(tree), {}};
    wt.q.assign(static_cast<std::size_t>(wt.tree.size()), support.empty() ? 1.0 : 0.0);
    for (int v : support) wt.q[static_cast<std::size_t>(v)] = 1.0;
    wt.normalize();
    return wt;
  }

  double mass(std::span<const int> nodes) const {
    double s = 0;
    for (int v : nodes) s += q[static_cast<std::size_t>(v)];
    return s;
  }

  int support_size() const {
    return static_cast<int>(std::count_if(q.begin(), q.end(), [](double w) { return w > 0.0; }));
  }

  void normalize() {
    const double s = std::accumulate(q.begin(), q.end(), 0.0);
    if (s > 0)
      for (double& w : q) w /= s;
  }
};

namespace detail {

/// Heaviest branch weight at v and the neighbor realizing it (lowest index
/// among ties). `sub` holds subtree sums for the tree rooted at `root`.
struct BranchWeights {
  std::vector<int> parent;
  std::vector<double> sub;
  double total = 0;

  BranchWeights(const WeightedTree& wt, int root) {
    const int n = wt.tree.size();
    parent.assign(static_cast<std::size_t>(n), -1);
    sub.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<int> order{root};
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    seen[static_cast<std::size_t>(root)] = 1;
    for (std::size_t i = 0; i < order.size(); ++i)
      for (int w : wt.tree.neighbors(order[i]))
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          parent[static_cast<std::size_t>(w)] = order[i];
          order.push_back(w);
        }
    if (static_cast<int>(order.size()) != n) throw NotATree("weighted tree is not connected");
    for (std::size_t i = order.size(); i-- > 0;) {
      const int v = order[i];
      sub[static_cast<std::size_t>(v)] += wt.q[static_cast<std::size_t>(v)];
      if (parent[static_cast<std::size_t>(v)] >= 0)
        sub[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])] += sub[static_cast<std::size_t>(v)];
    }
    total = sub[static_cast<std::size_t>(root)];
  }

  double toward(int v, int y) const {
    if (parent[static_cast<std::size_t>(y)] == v) return sub[static_cast<std::size_t>(y)];
    return total - sub[static_cast<std::size_t>(v)];
  }

  std::pair<double, int> heaviest(const UndirectedGraph& g, int v) const {
    double best = -1;
    int arg = -1;
    for (int y : g.neighbors(v)) {
      const double w = toward(v, y);
      if (w > best) {
        best = w;
        arg = y;
      }
    }
    return {std::max(best, 0.0), arg};
  }
};

}  // namespace detail

/// max over neighbors Y of q(branch(v, Y)), relative to the total mass.
inline double max_branch_weight(const WeightedTree& wt, int v) {
  detail::BranchWeights bw(wt, v);
  if (bw.total <= 0) return 0;
  return bw.heaviest(wt.tree, v).first / bw.total;
}

/// Walks from the lowest-index positive-weight node towards the heaviest
/// branch while that branch carries more than half the mass.
inline int find_central_node(const WeightedTree& wt) {
  const int n = wt.tree.size();
  if (n == 0 || static_cast<int>(wt.q.size()) != n) throw EmptyTree("tree has no nodes");
  int v = -1;
  for (int u = 0; u < n; ++u)
    if (wt.q[static_cast<std::size_t>(u)] > 0) {
      v = u;
      break;
    }
  if (v < 0) throw EmptyTree("weight function has empty support");
  detail::BranchWeights bw(wt, 0);
  const double half = bw.total / 2 * (1 + 1e-12);
  for (int moves = 0; moves <= n; ++moves) {
    auto [w, y] = bw.heaviest(wt.tree, v);
    if (y < 0 || w <= half) return v;
    v = y;
  }
  return v;  // unreachable for valid trees
}

// ---------------------------------------------------------------------------
// Chordal graphs and cliques
// ---------------------------------------------------------------------------

/// Reverse maximum cardinality search order, verified to be a perfect
/// elimination ordering. nullopt iff the graph is not chordal.
inline std::optional<std::vector<int>> perfect_elimination_order(const UndirectedGraph& g) {
  const int n = g.size();
  std::vector<int> weight(static_cast<std::size_t>(n), 0);
  std::vector<char> numbered(static_cast<std::size_t>(n), 0);
  std::vector<int> visit;
  visit.reserve(static_cast<std::size_t>(n));
  for (int step = 0; step < n; ++step) {
    int best = -1;
    for (int v = 0; v < n; ++v)
      if (!numbered[static_cast<std::size_t>(v)] &&
          (best < 0 || weight[static_cast<std::size_t>(v)] > weight[static_cast<std::size_t>(best)]))
        best = v;
    numbered[static_cast<std::size_t>(best)] = 1;
    visit.push_back(best);
    for (int w : g.neighbors(best))
      if (!numbered[static_cast<std::size_t>(w)]) ++weight[static_cast<std::size_t>(w)];
  }
  std::vector<int> peo(visit.rbegin(), visit.rend());
  std::vector<int> pos(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>(peo[static_cast<std::size_t>(i)])] = i;
  for (int v : peo) {
    int first = -1;
    for (int w : g.neighbors(v))
      if (pos[static_cast<std::size_t>(w)] > pos[static_cast<std::size_t>(v)] &&
          (first < 0 || pos[static_cast<std::size_t>(w)] < pos[static_cast<std::size_t>(first)]))
        first = w;
    if (first < 0) continue;
    for (int w : g.neighbors(v))
      if (w != first && pos[static_cast<std::size_t>(w)] > pos[static_cast<std::size_t>(v)] && !g.has_edge(first, w))
        return std::nullopt;
  }
  return peo;
}

inline bool is_chordal(const UndirectedGraph& g) { return perfect_elimination_order(g).has_value(); }

inline bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline std::vector<int> intersect(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline std::vector<int> difference(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Maximal cliques of a chordal graph, each sorted, list sorted.
inline std::vector<std::vector<int>> maximal_cliques(const UndirectedGraph& g) {
  auto peo = perfect_elimination_order(g);
  if (!peo) throw NotChordal("graph has a chordless cycle");
  const int n = g.size();
  std::vector<int> pos(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pos[static_cast<std::size_t>((*peo)[static_cast<std::size_t>(i)])] = i;
  std::vector<std::vector<int>> cand;
  for (int v : *peo) {
    std::vector<int> c{v};
    for (int w : g.neighbors(v))
      if (pos[static_cast<std::size_t>(w)] > pos[static_cast<std::size_t>(v)]) c.push_back(w);
    std::sort(c.begin(), c.end());
    cand.push_back(std::move(c));
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    bool maximal = true;
    for (std::size_t j = 0; j < cand.size() && maximal; ++j)
      if (i != j && cand[j].size() > cand[i].size() && is_subset(cand[i], cand[j])) maximal = false;
    if (maximal) out.push_back(cand[i]);
  }
  return out;
}

inline int clique_number(const std::vector<std::vector<int>>& cliques) {
  std::size_t w = 0;
  for (const auto& c : cliques) w = std::max(w, c.size());
  return static_cast<int>(w);
}

/// Clique tree (forest for disconnected hosts). `arrows` holds the
/// arrowhead marks of a directed clique tree: (a, b) means a *-> b.
struct JunctionTree {
  std::vector<std::vector<int>> cliques;
  UndirectedGraph tree;
  std::vector<std::pair<int, int>> arrows;

  int size() const noexcept { return static_cast<int>(cliques.size()); }

  bool has_arrow(int a, int b) const {
    return std::binary_search(arrows.begin(), arrows.end(), std::make_pair(a, b));
  }

  /// Index of the clique equal to c, or -1.
  int find(const std::vector<int>& c) const {
    auto it = std::find(cliques.begin(), cliques.end(), c);
    return it == cliques.end() ? -1 : static_cast<int>(it - cliques.begin());
  }

  std::vector<int> containing(int host_node) const {
    std::vector<int> out;
    for (int i = 0; i < size(); ++i)
      if (std::binary_search(cliques[static_cast<std::size_t>(i)].begin(), cliques[static_cast<std::size_t>(i)].end(), host_node))
        out.push_back(i);
    return out;
  }
};

/// For every host node, the cliques containing it induce a connected
/// subgraph of the tree. Returns the first violating host node.
inline std::optional<int> junction_property_violation(const JunctionTree& jt, int host_nodes) {
  for (int v = 0; v < host_nodes; ++v) {
    const auto holders = jt.containing(v);
    if (holders.size() <= 1) continue;
    std::vector<char> in(static_cast<std::size_t>(jt.size()), 0), seen(static_cast<std::size_t>(jt.size()), 0);
    for (int c : holders) in[static_cast<std::size_t>(c)] = 1;
    std::vector<int> stack{holders.front()};
    seen[static_cast<std::size_t>(holders.front())] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
      int c = stack.back();
      stack.pop_back();
      ++reached;
      for (int d : jt.tree.neighbors(c))
        if (in[static_cast<std::size_t>(d)] && !seen[static_cast<std::size_t>(d)]) {
          seen[static_cast<std::size_t>(d)] = 1;
          stack.push_back(d);
        }
    }
    if (reached != holders.size()) return v;
  }
  return std::nullopt;
}

/// Maximum-weight spanning tree (Kruskal, weight = intersection size, ties
/// by clique index pair) over the maximal cliques.
inline JunctionTree clique_tree(const UndirectedGraph& g) {
  JunctionTree jt;
  jt.cliques = maximal_cliques(g);
  const int m = jt.size();
  jt.tree = UndirectedGraph(m);
  struct Cand {
    int w, a, b;
  };
  std::vector<Cand> cand;
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      const int w = static_cast<int>(intersect(jt.cliques[static_cast<std::size_t>(a)], jt.cliques[static_cast<std::size_t>(b)]).size());
      if (w > 0) cand.push_back({w, a, b});
    }
  std::stable_sort(cand.begin(), cand.end(), [](const Cand& x, const Cand& y) { return x.w > y.w; });
  std::vector<int> root(static_cast<std::size_t>(m));
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int x) {
    while (root[static_cast<std::size_t>(x)] != x) x = root[static_cast<std::size_t>(x)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(x)])];
    return x;
  };
  for (const Cand& c : cand) {
    int ra = find(c.a), rb = find(c.b);
    if (ra == rb) continue;
    root[static_cast<std::size_t>(ra)] = rb;
    jt.tree.add_edge(c.a, c.b);
  }
  if (auto bad = junction_property_violation(jt, g.size()))
    throw CliqueTreeMismatch("junction property fails at node " + std::to_string(*bad));
  return jt;
}

struct CliqueGraph {
  std::vector<std::vector<int>> cliques;
  UndirectedGraph graph;
};

/// C1 - C2 is an edge iff S = C1 n C2 is non-empty and separates C1 \ S
/// from C2 \ S in the host.
inline CliqueGraph clique_graph(const UndirectedGraph& g) {
  CliqueGraph cg;
  cg.cliques = maximal_cliques(g);
  const int m = static_cast<int>(cg.cliques.size());
  cg.graph = UndirectedGraph(m);
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) {
      const auto& ca = cg.cliques[static_cast<std::size_t>(a)];
      const auto& cb = cg.cliques[static_cast<std::size_t>(b)];
      const auto s = intersect(ca, cb);
      if (s.empty()) continue;
      std::vector<char> blocked(static_cast<std::size_t>(g.size()), 0), target(static_cast<std::size_t>(g.size()), 0);
      for (int v : s) blocked[static_cast<std::size_t>(v)] = 1;
      for (int v : difference(cb, s)) target[static_cast<std::size_t>(v)] = 1;
      std::vector<int> stack = difference(ca, s);
      for (int v : stack) blocked[static_cast<std::size_t>(v)] = 1;
      bool separated = true;
      while (!stack.empty() && separated) {
        int u = stack.back();
        stack.pop_back();
        for (int w : g.neighbors(u)) {
          if (target[static_cast<std::size_t>(w)]) {
            separated = false;
            break;
          }
          if (!blocked[static_cast<std::size_t>(w)]) {
            blocked[static_cast<std::size_t>(w)] = 1;
            stack.push_back(w);
          }
        }
      }
      if (separated) cg.graph.add_edge(a, b);
    }
  return cg;
}

struct IncomparabilityReport {
  bool incomparable = true;
  /// Clique indices (c1, c2, c3) of the nested edge pair c1-c2, c2-c3.
  std::optional<std::array<int, 3>> witness;
};

/// Adjacent edges whose intersections are equal do not count as nested;
/// only proper containment makes a pair comparable.
inline IncomparabilityReport is_intersection_incomparable(const CliqueGraph& cg) {
  IncomparabilityReport rep;
  const int m = cg.graph.size();
  for (int c2 = 0; c2 < m; ++c2) {
    const auto& nb = cg.graph.neighbors(c2);
    for (int c1 : nb)
      for (int c3 : nb) {
        if (c1 == c3) continue;
        const auto s12 = intersect(cg.cliques[static_cast<std::size_t>(c1)], cg.cliques[static_cast<std::size_t>(c2)]);
        const auto s23 = intersect(cg.cliques[static_cast<std::size_t>(c2)], cg.cliques[static_cast<std::size_t>(c3)]);
        if (s12.size() < s23.size() && is_subset(s12, s23)) {
          rep.incomparable = false;
          rep.witness = std::array<int, 3>{c1, c2, c3};
          return rep;
        }
      }
  }
  return rep;
}

/// Adds the arrowhead marks induced by `dag` to a clique tree of its
/// skeleton (or of a chain component given in host indices).
inline JunctionTree directed_clique_tree(const CausalDag& dag, JunctionTree jt) {
  std::vector<int> members;
  for (const auto& c : jt.cliques) members.insert(members.end(), c.begin(), c.end());
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  for (int v : members)
    if (v < 0 || v >= dag.size()) throw CliqueTreeMismatch("clique member outside the DAG");
  const Subgraph host = induced_subgraph(skeleton(dag), members);
  auto expected = maximal_cliques(host.graph);
  for (auto& c : expected)
    for (int& v : c) v = host.nodes[static_cast<std::size_t>(v)];
  std::sort(expected.begin(), expected.end());
  auto given = jt.cliques;
  std::sort(given.begin(), given.end());
  if (given != expected) throw CliqueTreeMismatch("cliques are not the maximal cliques of the skeleton");

  jt.arrows.clear();
  for (auto [a, b] : jt.tree.edges())
    for (auto [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
      const auto& c1 = jt.cliques[static_cast<std::size_t>(from)];
      const auto& c2 = jt.cliques[static_cast<std::size_t>(to)];
      const auto shared = intersect(c1, c2);
      const auto priv = difference(c2, c1);
      bool arrow = true;
      for (int s : shared)
        for (int p : priv)
          if (!dag.has_edge(s, p)) arrow = false;
      if (arrow) jt.arrows.emplace_back(from, to);
    }
  std::sort(jt.arrows.begin(), jt.arrows.end());
  return jt;
}

// ---------------------------------------------------------------------------
// Edge-list text format
// ---------------------------------------------------------------------------
//
//   # nodes 4
//   0 -> 1
//   1 2
//
// Directed edges use "->", undirected edges a single space. Comment lines
// start with '#'; the "# nodes N" header is optional.

inline std::string dump_edge_list(const EssentialGraph& eg) {
  std::ostringstream out;
  out << "# nodes " << eg.node_count << '\n';
  for (auto [u, v] : eg.directed) out << u << " -> " << v << '\n';
  for (auto [u, v] : eg.undirected) out << u << ' ' << v << '\n';
  return out.str();
}

inline std::string dump_edge_list(const UndirectedGraph& g) {
  EssentialGraph eg;
  eg.node_count = g.size();
  eg.undirected = g.edges();
  return dump_edge_list(eg);
}

inline std::string dump_edge_list(const CausalDag& dag) {
  EssentialGraph eg;
  eg.node_count = dag.size();
  eg.directed = dag.edges();
  return dump_edge_list(eg);
}

inline EssentialGraph parse_edge_list(std::string_view text) {
  EssentialGraph eg;
  int declared = -1, max_node = -1;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t col = 0;
    auto skip_ws = [&] {
      while (col < line.size() && (line[col] == ' ' || line[col] == '\t')) ++col;
    };
    auto read_int = [&]() -> int {
      skip_ws();
      const std::size_t begin = col;
      while (col < line.size() && line[col] >= '0' && line[col] <= '9') ++col;
      if (begin == col) throw ParseError("expected a node index", line_no, col + 1);
      return std::stoi(std::string(line.substr(begin, col - begin)));
    };
    skip_ws();
    if (col == line.size()) {
      if (end == text.size()) break;
      continue;
    }
    if (line[col] == '#') {
      std::string_view rest = line.substr(col + 1);
      const auto p = rest.find_first_not_of(" \t");
      if (p != std::string_view::npos && rest.substr(p, 5) == "nodes") {
        col += 1 + p + 5;
        declared = read_int();
      }
      if (end == text.size()) break;
      continue;
    }
    const int u = read_int();
    skip_ws();
    bool directed = false;
    if (col + 1 < line.size() && line[col] == '-' && line[col + 1] == '>') {
      directed = true;
      col += 2;
    }
    const int v = read_int();
    skip_ws();
    if (col != line.size()) throw ParseError("unexpected trailing text", line_no, col + 1);
    if (u == v) throw ParseError("self loop", line_no, 1);
    max_node = std::max({max_node, u, v});
    if (directed)
      eg.directed.emplace_back(u, v);
    else
      eg.undirected.emplace_back(std::min(u, v), std::max(u, v));
    if (end == text.size()) break;
  }
  eg.node_count = std::max(declared, max_node + 1);
  if (declared >= 0 && max_node >= declared) throw ParseError("node index exceeds declared node count", 0, 0);
  std::sort(eg.directed.begin(), eg.directed.end());
  std::sort(eg.undirected.begin(), eg.undirected.end());
  return eg;
}

}  // namespace cbandit
