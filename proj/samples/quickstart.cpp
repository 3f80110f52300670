// Generate a random causal tree, run CN-UCB on it and compare with plain UCB.
#include <cstdio>

#include "cbandit/cbandit.hpp"

using namespace cbandit;

int main() {
  GeneratorSpec g;
  g.family = "tree";
  g.n = 15;
  g.seed = 7;
  const auto gi = generate(g);
  const auto& dag = gi.instance.dag();
  std::printf("reward node %s, %zu edges\n", dag.name(gi.truth.reward_node).c_str(), gi.truth.edges.size());

  AlgoConfig cfg;
  cfg.K = 2;
  cfg.horizon = 50000;
  const RunLog cn = cn_ucb_tree(gi.instance, cfg, 1);
  const auto& o = cn.outcome;
  std::printf("cn-ucb-tree: identified %s after %lld exploration rounds (cap %.0f), %d stage-3 arms, regret %.1f\n",
              o.identified_node ? dag.name(*o.identified_node).c_str() : "nothing",
              static_cast<long long>(o.exploration_rounds()), o.budget_cap, o.stage3_arms, cn.final_regret());

  const RunLog ucb = ucb_full(gi.instance, 1, cfg.horizon);
  std::printf("ucb-full:    regret %.1f\n", ucb.final_regret());

  // exact interventional reward of the best arm
  double best = 0;
  for (const auto& a : gi.instance.action_set()) best = std::max(best, expected_reward(gi.instance, a));
  std::printf("best arm mean %.3f\n", best);
}
