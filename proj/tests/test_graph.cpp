#include <gtest/gtest.h>

#include <set>

#include "cbandit/cbandit.hpp"
#include "oracles.hpp"

using namespace cbandit;

namespace {

UndirectedGraph path_graph(int n) {
  UndirectedGraph g(n);
  for (int v = 1; v < n; ++v) g.add_edge(v - 1, v);
  return g;
}

CausalDag directed_path(int n) {
  CausalDag d(n);
  for (int v = 1; v < n; ++v) d.add_edge(v - 1, v);
  return d;
}

}  // namespace

TEST(UndirectedGraph, Basics) {
  UndirectedGraph g(4);
  g.add_edge(2, 1);
  g.add_edge(1, 2);
  g.add_edge(0, 1);
  EXPECT_EQ(g.edge_count(), 2u);
  EXPECT_EQ(g.edges(), (std::vector<std::pair<int, int>>{{0, 1}, {1, 2}}));
  EXPECT_THROW(g.add_edge(3, 3), InvalidInstance);
  EXPECT_EQ(connected_components(g), (std::vector<std::vector<int>>{{0, 1, 2}, {3}}));
  EXPECT_FALSE(is_tree(g));
  g.add_edge(2, 3);
  EXPECT_TRUE(is_tree(g));
}

TEST(EssentialGraph, Collider) {
  CausalDag d(3);
  d.add_edge(0, 2);
  d.add_edge(1, 2);
  const auto eg = essential_graph(d);
  EXPECT_EQ(eg.directed, (std::vector<std::pair<int, int>>{{0, 2}, {1, 2}}));
  EXPECT_TRUE(eg.undirected.empty());
}

TEST(EssentialGraph, ChainIsUndirected) {
  const auto eg = essential_graph(directed_path(4));
  EXPECT_TRUE(eg.directed.empty());
  EXPECT_EQ(eg.undirected.size(), 3u);
  EXPECT_EQ(chain_components(eg).size(), 1u);
}

TEST(EssentialGraph, MeekPropagation) {
  // 0 -> 2 <- 1, 2 - 3 must become 2 -> 3
  CausalDag d(4);
  d.add_edge(0, 2);
  d.add_edge(1, 2);
  d.add_edge(2, 3);
  const auto eg = essential_graph(d);
  EXPECT_EQ(eg.directed, (std::vector<std::pair<int, int>>{{0, 2}, {1, 2}, {2, 3}}));
}

TEST(EssentialGraph, MatchesEquivalenceClassEnumeration) {
  oracle::Rng rng(2024);
  int checked = 0;
  while (checked < 60) {
    const CausalDag d = oracle::random_dag(8, 0.35, rng);
    if (d.edge_count() > 14) continue;
    ++checked;
    const auto eg = essential_graph(d);
    const auto want = oracle::mec_cpdag(d);
    const std::set<std::pair<int, int>> directed(eg.directed.begin(), eg.directed.end());
    const std::set<std::pair<int, int>> undirected(eg.undirected.begin(), eg.undirected.end());
    EXPECT_EQ(directed, want.directed);
    EXPECT_EQ(undirected, want.undirected);
    for (const auto& c : chain_components(eg)) EXPECT_TRUE(is_chordal(c.graph));
  }
}

TEST(EdgeList, RoundTripAndErrors) {
  CausalDag d(4);
  d.add_edge(0, 2);
  d.add_edge(1, 2);
  d.add_edge(2, 3);
  d.add_edge(0, 1);
  const auto eg = essential_graph(d);
  EXPECT_EQ(parse_edge_list(dump_edge_list(eg)), eg);
  try {
    parse_edge_list("# nodes 3\n0 -> 1\n1 x\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 3u);
  }
}

TEST(Branch, PathAndErrors) {
  const auto g = path_graph(5);
  EXPECT_EQ(branch(g, 2, 3), (std::vector<int>{3, 4}));
  EXPECT_EQ(branch(g, 2, 1), (std::vector<int>{0, 1}));
  EXPECT_THROW(branch(g, 0, 2), NotAnEdge);
}

TEST(CentralNode, SmallCases) {
  EXPECT_EQ(find_central_node(WeightedTree::uniform(path_graph(5))), 2);
  EXPECT_EQ(find_central_node(WeightedTree::uniform(path_graph(1))), 0);
  // weight concentrated on one leaf
  WeightedTree wt{path_graph(4), {0, 0, 0, 1}};
  EXPECT_EQ(find_central_node(wt), 3);
  const int s[] = {0, 1};
  EXPECT_DOUBLE_EQ(max_branch_weight(WeightedTree::uniform(path_graph(4), s), 1), 0.5);
  EXPECT_THROW(find_central_node(WeightedTree{path_graph(3), {0, 0, 0}}), EmptyTree);
  UndirectedGraph two(2);
  EXPECT_THROW(max_branch_weight(WeightedTree::uniform(two), 0), NotATree);
}

TEST(CentralNode, BranchWeightMatchesBruteForce) {
  oracle::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 20;
    WeightedTree wt{oracle::random_tree(n, rng), {}};
    for (int v = 0; v < n; ++v) wt.q.push_back(std::bernoulli_distribution(0.3)(rng) ? 0.0 : std::uniform_real_distribution<double>(0, 1)(rng));
    wt.q[0] += 0.01;
    wt.normalize();
    for (int v = 0; v < n; ++v) EXPECT_NEAR(max_branch_weight(wt, v), oracle::brute_max_branch(wt.tree, wt.q, v), 1e-12);
    EXPECT_LE(oracle::brute_max_branch(wt.tree, wt.q, find_central_node(wt)), 0.5 + 1e-12);
  }
}

TEST(Chordal, CycleIsNotChordal) {
  UndirectedGraph c4(4);
  c4.add_edge(0, 1);
  c4.add_edge(1, 2);
  c4.add_edge(2, 3);
  c4.add_edge(3, 0);
  EXPECT_FALSE(is_chordal(c4));
  EXPECT_THROW(maximal_cliques(c4), NotChordal);
  c4.add_edge(0, 2);
  EXPECT_TRUE(is_chordal(c4));
  EXPECT_EQ(maximal_cliques(c4), (std::vector<std::vector<int>>{{0, 1, 2}, {0, 2, 3}}));
}

TEST(Chordal, TreeCliquesAreEdges) {
  oracle::Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = oracle::random_tree(2 + trial, rng);
    const auto cl = maximal_cliques(t);
    EXPECT_EQ(cl, [&] {
      std::vector<std::vector<int>> e;
      for (auto [u, v] : t.edges()) e.push_back({u, v});
      std::sort(e.begin(), e.end());
      return e;
    }());
    EXPECT_EQ(clique_number(cl), 2);
  }
}

TEST(Chordal, MaximalCliquesMatchSubsetEnumeration) {
  oracle::Rng rng(99);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 1 + trial % 12;
    const auto g = oracle::random_chordal(n, 2 + trial % 4, rng);
    ASSERT_TRUE(is_chordal(g));
    const auto got = maximal_cliques(g);
    EXPECT_EQ(got, oracle::subset_maximal_cliques(g));
    EXPECT_LE(static_cast<int>(got.size()), n);
  }
}

TEST(CliqueTree, TriangleAndPath) {
  UndirectedGraph tri(3);
  tri.add_edge(0, 1);
  tri.add_edge(1, 2);
  tri.add_edge(0, 2);
  const auto jt = clique_tree(tri);
  EXPECT_EQ(jt.size(), 1);
  EXPECT_EQ(jt.tree.edge_count(), 0u);

  const auto p = clique_tree(path_graph(5));
  ASSERT_EQ(p.size(), 4);
  for (int i = 0; i + 1 < 4; ++i) {
    const int a = p.find({i, i + 1}), b = p.find({i + 1, i + 2});
    EXPECT_TRUE(p.tree.has_edge(a, b));
  }
  EXPECT_EQ(p.tree.edge_count(), 3u);
}

TEST(CliqueTree, JunctionPropertyOnRandomChordalGraphs) {
  oracle::Rng rng(123);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 25;
    const auto g = oracle::random_chordal(n, 2 + trial % 4, rng);
    const auto jt = clique_tree(g);
    EXPECT_TRUE(oracle::junction_property(jt.cliques, jt.tree.edges(), n));
    EXPECT_FALSE(junction_property_violation(jt, n).has_value());
    EXPECT_EQ(jt.tree.edge_count() + connected_components(g).size(), jt.cliques.size());
  }
}

TEST(CliqueGraph, SmallExamples) {
  UndirectedGraph g(4);  // triangle 0-1-2 plus pendant 2-3
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(0, 2);
  g.add_edge(2, 3);
  const auto cg = clique_graph(g);
  EXPECT_EQ(cg.cliques, (std::vector<std::vector<int>>{{0, 1, 2}, {2, 3}}));
  EXPECT_EQ(cg.graph.edge_count(), 1u);

  const auto pg = clique_graph(path_graph(6));
  const auto pt = clique_tree(path_graph(6));
  EXPECT_EQ(pg.cliques, pt.cliques);
  EXPECT_EQ(pg.graph.edges(), pt.tree.edges());
}

TEST(CliqueGraph, StarHostIsComplete) {
  // every pair of edges of a star is adjacent in some clique tree
  UndirectedGraph star(4);
  for (int v = 1; v < 4; ++v) star.add_edge(0, v);
  EXPECT_EQ(clique_graph(star).graph.edge_count(), 3u);
}

TEST(CliqueGraph, MatchesSpanningTreeUnion) {
  oracle::Rng rng(31);
  int checked = 0;
  for (int trial = 0; checked < 80 && trial < 2000; ++trial) {
    const int n = 3 + trial % 8;
    const auto g = oracle::random_chordal(n, 2 + trial % 3, rng);
    if (!is_connected(g)) continue;
    const auto cg = clique_graph(g);
    if (cg.cliques.size() > 6) continue;
    ++checked;
    const auto want = oracle::clique_tree_union(cg.cliques, n);
    const auto got = cg.graph.edges();
    const std::set<std::pair<int, int>> got_set(got.begin(), got.end());
    EXPECT_EQ(got_set, want);
    const auto jt = clique_tree(g);
    auto index = [&](int i) {
      const auto& c = jt.cliques[static_cast<std::size_t>(i)];
      return static_cast<int>(std::find(cg.cliques.begin(), cg.cliques.end(), c) - cg.cliques.begin());
    };
    for (auto [a, b] : jt.tree.edges()) EXPECT_TRUE(cg.graph.has_edge(index(a), index(b)));
  }
  EXPECT_EQ(checked, 80);
}

TEST(Incomparability, NestedWitness) {
  CliqueGraph cg;
  cg.cliques = {{1, 2}, {2, 3}, {2, 3, 4}};
  cg.graph = UndirectedGraph(3);
  cg.graph.add_edge(0, 1);
  cg.graph.add_edge(1, 2);
  const auto r = is_intersection_incomparable(cg);
  EXPECT_FALSE(r.incomparable);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(*r.witness, (std::array<int, 3>{0, 1, 2}));
}

TEST(Incomparability, TreesAndOracle) {
  oracle::Rng rng(17);
  for (int trial = 0; trial < 30; ++trial)
    EXPECT_TRUE(is_intersection_incomparable(clique_graph(oracle::random_tree(2 + trial, rng))).incomparable);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracle::random_chordal(3 + trial % 10, 4, rng);
    const auto cg = clique_graph(g);
    EXPECT_EQ(is_intersection_incomparable(cg).incomparable, !oracle::comparable_pair_exists(cg));
  }
}

TEST(DirectedCliqueTree, PathAndTree) {
  const auto d = directed_path(5);
  const auto dct = directed_clique_tree(d, clique_tree(skeleton(d)));
  for (int i = 0; i + 1 < 4; ++i)
    EXPECT_TRUE(dct.has_arrow(dct.find({i, i + 1}), dct.find({i + 1, i + 2})));
  EXPECT_EQ(dct.arrows.size(), 3u);

  oracle::Rng rng(4);
  const auto t = oracle::random_tree(12, rng);
  const CausalDag tree_dag = oracle::moral_dag_from_chordal(t);
  const auto tt = directed_clique_tree(tree_dag, clique_tree(t));
  // the arrow between two edge cliques points away from their shared node's parent side
  for (auto [a, b] : tt.tree.edges()) {
    const auto s = intersect(tt.cliques[static_cast<std::size_t>(a)], tt.cliques[static_cast<std::size_t>(b)]);
    ASSERT_EQ(s.size(), 1u);
    const int pa = difference(tt.cliques[static_cast<std::size_t>(b)], s)[0];
    EXPECT_EQ(tt.has_arrow(a, b), tree_dag.has_edge(s[0], pa));
  }
}

TEST(DirectedCliqueTree, MismatchAndSingleParent) {
  const auto d = directed_path(4);
  JunctionTree bad = clique_tree(path_graph(3));
  EXPECT_NO_THROW(directed_clique_tree(d, bad));  // cliques of the sub-path {0,1,2}
  bad.cliques[0] = {0, 3};
  EXPECT_THROW(directed_clique_tree(d, bad), CliqueTreeMismatch);

  oracle::Rng rng(71);
  int checked = 0;
  for (int trial = 0; checked < 60 && trial < 5000; ++trial) {
    const auto g = oracle::random_chordal(4 + trial % 9, 4, rng);
    if (!is_connected(g)) continue;
    if (!is_intersection_incomparable(clique_graph(g)).incomparable) continue;
    ++checked;
    const CausalDag md = oracle::moral_dag_from_chordal(g);
    ASSERT_TRUE(essential_graph(md).directed.empty());
    const auto dct = directed_clique_tree(md, clique_tree(g));
    std::vector<int> parents(static_cast<std::size_t>(dct.size()), 0);
    // a parent is a one-way arrow; bidirected marks (shared nodes pointing
    // both ways) occur even on stars and do not count
    for (auto [a, b] : dct.arrows)
      if (!dct.has_arrow(b, a)) ++parents[static_cast<std::size_t>(b)];
    for (int p : parents) EXPECT_LE(p, 1);
  }
  EXPECT_EQ(checked, 60);
}
