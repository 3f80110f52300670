#include <gtest/gtest.h>

#include <cmath>

#include "cbandit/cbandit.hpp"
#include "oracles.hpp"

using namespace cbandit;

namespace {

GeneratorSpec family(const std::string& f, int n, std::uint64_t seed) {
  GeneratorSpec s;
  s.family = f;
  s.n = n;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Generators, MarginsHold) {
  for (const char* f : {"tree", "binary_tree", "forest", "chordal"})
    for (std::uint64_t s = 0; s < 4; ++s) {
      const auto gi = generate(family(f, 9, s));
      const auto rep = validate_assumptions(gi.instance, {0.3, 0.3});
      EXPECT_TRUE(rep.passed()) << f << " seed " << s;
      EXPECT_GT(rep.weakest_edge_effect, 0.3);
      EXPECT_EQ(gi.truth.reward_node, gi.instance.reward().node);
      EXPECT_EQ(gi.truth.edges, gi.instance.dag().edges());
    }
}

TEST(Generators, DeterministicInSeed) {
  for (const char* f : {"tree", "forest", "chordal"}) {
    const auto a = generate(family(f, 8, 3)), b = generate(family(f, 8, 3)), c = generate(family(f, 8, 4));
    EXPECT_EQ(instance_to_string(a.instance), instance_to_string(b.instance)) << f;
    EXPECT_NE(instance_to_string(a.instance), instance_to_string(c.instance)) << f;
  }
}

TEST(Generators, TreeShape) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto spec = family("tree", 12, s);
    spec.max_degree = 3;
    const auto gi = generate(spec);
    const auto eg = essential_graph(gi.instance.dag());
    EXPECT_TRUE(eg.directed.empty());
    EXPECT_TRUE(is_tree(eg.skeleton()));
    EXPECT_LE(eg.skeleton().max_degree(), 3);
    EXPECT_EQ(gi.truth.max_degree, eg.skeleton().max_degree());
  }
}

TEST(Generators, BinaryTreeShape) {
  const auto gi = generate(family("binary_tree", 15, 1));
  const auto& d = gi.instance.dag();
  int roots = 0;
  for (int v = 0; v < 15; ++v) {
    EXPECT_LE(d.parents(v).size(), 1u);
    EXPECT_LE(d.children(v).size(), 2u);
    roots += d.parents(v).empty();
  }
  EXPECT_EQ(roots, 1);
  EXPECT_EQ(gi.truth.depth, 3);
}

TEST(Generators, ForestComponents) {
  auto spec = family("forest", 21, 2);
  spec.components = 3;
  const auto gi = generate(spec);
  const auto comps = chain_components(essential_graph(gi.instance.dag()));
  ASSERT_EQ(comps.size(), 3u);
  ASSERT_EQ(gi.truth.components.size(), 3u);
  for (const auto& c : comps) {
    EXPECT_EQ(c.nodes.size(), 7u);
    EXPECT_NE(std::find(gi.truth.components.begin(), gi.truth.components.end(), c.nodes), gi.truth.components.end());
  }
  spec.components = 30;
  EXPECT_THROW(generate(spec), InvalidConfig);
}

TEST(Generators, ChordalGroundTruth) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    auto spec = family("chordal", 10, s);
    spec.max_clique = 3;
    const auto gi = generate(spec);
    const auto skel = skeleton(gi.instance.dag());
    EXPECT_TRUE(is_chordal(skel));
    EXPECT_TRUE(essential_graph(gi.instance.dag()).directed.empty());  // moral: no v-structures
    EXPECT_EQ(gi.truth.cliques, oracle::subset_maximal_cliques(skel));
    EXPECT_LE(clique_number(gi.truth.cliques), 3);
    EXPECT_TRUE(gi.truth.intersection_incomparable);
    EXPECT_GE(gi.truth.reward_clique_size, 1);
    EXPECT_FALSE(junction_property_violation(gi.truth.directed_clique_tree, 10));
  }
  auto pi = family("chordal", 10, 0);
  pi.proper_interval = true;
  EXPECT_TRUE(generate(pi).truth.intersection_incomparable);
}

TEST(Generators, WalkthroughInstance) {
  const auto gi = generate_figure1_instance(2, {0.3, 0.3});
  EXPECT_EQ(gi.instance.size(), 9);
  EXPECT_EQ(gi.truth.reward_node, 6);
  EXPECT_TRUE(gi.instance.dag().has_edge(2, 6));
  EXPECT_TRUE(validate_assumptions(gi.instance, {0.3, 0.3}).passed());
  WeightedTree wt = WeightedTree::uniform(skeleton(gi.instance.dag()));
  EXPECT_EQ(find_central_node(wt), 1);
}

TEST(Generators, Errors) {
  auto spec = family("tree", 5, 0);
  spec.margins = {0.99, 0.3};
  spec.attempts = 3;
  EXPECT_THROW(generate(spec), GenerationTimeout);
  EXPECT_THROW(generate(family("lattice", 5, 0)), ConfigError);
  EXPECT_THROW(generate(family("tree", 0, 0)), InvalidConfig);
  EXPECT_THROW(generate_lower_bound_thm4(5, 2, 10000, 11), IndexOutOfRange);
  EXPECT_THROW(generate_lower_bound_thm5(5, 2, 10000, -1), IndexOutOfRange);
}

TEST(LowerBound, FirstFamilyMeans) {
  const int n = 5, K = 2;
  const std::int64_t T = 10000;
  const double gap = 0.25 * std::sqrt(10.0 / 10000.0);
  EXPECT_DOUBLE_EQ(lower_bound_gap(n, K, T), gap);
  for (int idx = 0; idx <= n * K; ++idx) {
    const auto inst = generate_lower_bound_thm4(n, K, T, idx);
    const auto acts = inst.action_set();
    ASSERT_EQ(acts.size(), static_cast<std::size_t>(n * K));
    for (const auto& a : acts) {
      const bool target = idx > 0 && a.node() == (idx - 1) / K && a.value() == (idx - 1) % K + 1;
      EXPECT_EQ(expected_reward(inst, a), target ? gap : 0.0) << idx << " " << a.to_string();
    }
    EXPECT_EQ(expected_reward(inst, Intervention::none()), 0.0);
    const auto rep = validate_assumptions(inst, {0.3, 0.3});
    EXPECT_FALSE(rep.assumption2) << idx;
  }
}

TEST(LowerBound, SecondFamilyMeans) {
  const int n = 5, K = 2;
  const std::int64_t T = 10000;
  const double gap = lower_bound_gap(n, K, T);
  for (int idx = 0; idx <= n * K; ++idx) {
    const auto inst = generate_lower_bound_thm5(n, K, T, idx);
    EXPECT_EQ(inst.actions().first, 2);
    for (const auto& a : inst.action_set()) {
      const bool target = idx > 0 && a.node() == (idx - 1) / K && a.value() == (idx - 1) % K + 2;
      EXPECT_EQ(expected_reward(inst, a), target ? gap : 0.0) << idx << " " << a.to_string();
    }
    const auto rep = validate_assumptions(inst, {0.3, 0.3});
    EXPECT_TRUE(rep.assumption2) << idx;
    EXPECT_FALSE(rep.assumption3) << idx;
  }
}
