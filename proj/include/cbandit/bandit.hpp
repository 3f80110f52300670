#pragma once

// Environment / agent contract, run logs, the sample budget and UCB1.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causal_model.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace cbandit {

enum class Stage { observe = 0, stage1 = 1, stage2 = 2, stage3 = 3 };

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::observe: return "observe";
    case Stage::stage1: return "stage1";
    case Stage::stage2: return "stage2";
    case Stage::stage3: return "stage3";
  }
  return "?";
}

struct RoundRecord {
  std::int64_t t = 0;  // 1-based
  Stage stage = Stage::observe;
  Intervention action;
  double reward = 0;
  double mu = 0;
  double cum_regret = 0;
};

enum class EliminationRule { downstream_of_non_ancestor, upstream_of_ancestor, not_in_reward_branch };

inline std::string_view rule_name(EliminationRule r) {
  switch (r) {
    case EliminationRule::downstream_of_non_ancestor: return "downstream-of-non-ancestor";
    case EliminationRule::upstream_of_ancestor: return "upstream-of-ancestor";
    case EliminationRule::not_in_reward_branch: return "not-in-reward-branch";
  }
  return "?";
}

/// One element (a node, or a clique given by its members) leaving q's support.
struct Elimination {
  Stage stage = Stage::stage1;
  int component = 0;
  int iteration = 0;
  std::vector<int> nodes;
  EliminationRule rule = EliminationRule::downstream_of_non_ancestor;
};

struct IterationTrace {
  Stage stage = Stage::stage1;
  int component = 0;
  int iteration = 0;
  std::vector<int> central;  // node {v} or clique members
  int support_before = 0;
  int support_after = 0;
  double eliminated_mass = 0;  // fraction of the support mass removed
  bool ancestor = false;
};

/// Empirical statistics of one block of B identical pulls.
struct BlockEstimate {
  Stage stage = Stage::observe;
  Intervention action;
  int pulls = 0;
  double reward_mean = 0;
  std::vector<std::vector<double>> frequencies;  // per node, per value
};

/// Diagnostic record of stages 1-2 and the stage-3 arm set.
struct StageOutcome {
  std::string algorithm;
  std::optional<int> identified_node;
  std::optional<std::vector<int>> identified_clique;
  bool fallback = false;
  std::array<std::int64_t, 4> rounds{};  // indexed by Stage
  std::vector<std::pair<int, int>> orientations;  // learned node edges (tail, head)
  std::vector<std::pair<std::vector<int>, std::vector<int>>> clique_orientations;
  std::vector<Elimination> eliminations;
  std::vector<IterationTrace> iterations;
  std::vector<BlockEstimate> blocks;
  int stage3_arms = 0;
  std::int64_t budget = 0;  // B
  double budget_cap = 0;    // worst-case pre-stage-3 bound for this algorithm
  double budget_cap_cliques = 0;  // general graphs: log2 |C(G)| accounting

  std::int64_t exploration_rounds() const { return rounds[0] + rounds[1] + rounds[2]; }
};

class RunLog {
 public:
  std::vector<RoundRecord> records;
  double mu_star = 0;
  StageOutcome outcome;

  double final_regret() const { return records.empty() ? 0.0 : records.back().cum_regret; }

  /// Rows with t divisible by `stride`, plus the last row. do() is written
  /// as node -1, value -1.
  void write_csv(std::ostream& out, std::string_view run_id, std::int64_t stride = 1, bool header = true) const {
    if (header) out << "run_id,t,stage,action_node,action_value,reward,mu,cum_regret\n";
    if (stride < 1) stride = 1;
    char buf[256];
    for (std::size_t i = 0; i < records.size(); ++i) {
      const RoundRecord& r = records[i];
      if (r.t % stride != 0 && i + 1 != records.size()) continue;
      const int node = r.action.empty() ? -1 : r.action.node();
      const int value = r.action.empty() ? -1 : r.action.value();
      std::snprintf(buf, sizeof buf, ",%lld,%s,%d,%d,%.12g,%.12g,%.12g\n", static_cast<long long>(r.t),
                    std::string(stage_name(r.stage)).c_str(), node, value, r.reward, r.mu, r.cum_regret);
      out << run_id << buf;
    }
  }
};

// ---------------------------------------------------------------------------
// Configuration and budgets
// ---------------------------------------------------------------------------

struct AlgoConfig {
  int K = 2;
  double delta = 0.1;
  AssumptionMargins margins{0.3, 0.3};
  std::int64_t horizon = 0;
  std::optional<std::int64_t> B;
};

/// B = ceil(max{32/D^2 ln(8nK/d), 2/e^2 ln(8 n^2 K^2 / d)}), at least 1.
inline std::int64_t compute_budget(int n, int K, double delta, const AssumptionMargins& margins) {
  margins.validate();
  if (n < 1 || K < 1) throw InvalidConfig("n and K must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
  const double nk = static_cast<double>(n) * K;
  const double reward_term = 32.0 / (margins.delta_gap * margins.delta_gap) * std::log(8.0 * nk / delta);
  const double effect_term = 2.0 / (margins.epsilon_margin * margins.epsilon_margin) * std::log(8.0 * nk * nk / delta);
  const double b = std::ceil(std::max(reward_term, effect_term));
  if (!(b >= 1.0)) return 1;
  if (b > 1e15) throw InvalidConfig("budget overflows");
  return static_cast<std::int64_t>(b);
}

inline std::int64_t resolve_budget(const AlgoConfig& cfg, int n) {
  if (cfg.B) {
    if (*cfg.B < 1) throw InvalidConfig("B must be at least 1");
    return *cfg.B;
  }
  return compute_budget(n, cfg.K, cfg.delta, cfg.margins);
}

/// KB(2+d) log2 n + B.
inline double tree_budget_bound(int n, int K, std::int64_t B, int d) {
  return static_cast<double>(K) * static_cast<double>(B) * (2.0 + d) * std::log2(static_cast<double>(n)) + static_cast<double>(B);
}

/// 2KB(d + C) log2 n.
inline double forest_budget_bound(int n, int K, std::int64_t B, int d, int components) {
  return 2.0 * K * static_cast<double>(B) * (d + components) * std::log2(static_cast<double>(n));
}

/// B + KB log2(n) (w_R + d w_R + sum_G w(G)).
inline double general_budget_bound(int n, int K, std::int64_t B, int omega_reward, int jt_degree, int omega_sum) {
  return static_cast<double>(B) + K * static_cast<double>(B) * std::log2(static_cast<double>(n)) *
                                      (omega_reward + jt_degree * omega_reward + omega_sum);
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

class Environment {
 public:
  struct Pull {
    double reward;
    std::span<const int> values;
  };

  Environment(const CausalInstance& instance, std::uint64_t seed, std::int64_t horizon, bool strict = true,
              InferenceOptions opts = {})
      : instance_(&instance),
        sampler_(instance),
        rng_(seed),
        horizon_(horizon <= 0 ? std::numeric_limits<std::int64_t>::max() : horizon),
        strict_(strict),
        opts_(opts),
        values_(static_cast<std::size_t>(instance.size())) {
    double best = mu(Intervention::none());
    for (const auto& a : instance.action_set()) best = std::max(best, mu(a));
    log_.mu_star = best;
  }

  const CausalInstance& instance() const noexcept { return *instance_; }
  double mu_star() const noexcept { return log_.mu_star; }

  /// Exact expected reward, cached.
  double mu(const Intervention& a) {
    auto it = mu_cache_.find(a);
    if (it != mu_cache_.end()) return it->second;
    const double m = expected_reward(*instance_, a, opts_);
    mu_cache_.emplace(a, m);
    return m;
  }

  std::int64_t t() const noexcept { return t_; }
  std::int64_t horizon() const noexcept { return horizon_; }
  std::int64_t remaining() const noexcept { return horizon_ - t_; }
  bool exhausted() const noexcept { return t_ >= horizon_; }

  void set_stage(Stage s) noexcept { stage_ = s; }
  Stage stage() const noexcept { return stage_; }

  Pull pull(const Intervention& a) {
    if (exhausted()) {
      if (strict_) throw HorizonExceeded("pull beyond horizon " + std::to_string(horizon_));
    }
    instance_->check(a);
    const double m = mu(a);
    const double base = sampler_.draw(a, rng_, values_);
    const double reward = base + noise_(rng_);
    ++t_;
    cum_regret_ += log_.mu_star - m;
    log_.records.push_back({t_, stage_, a, reward, m, cum_regret_});
    ++log_.outcome.rounds[static_cast<std::size_t>(stage_)];
    return {reward, values_};
  }

  /// The learner's inputs: the essential graph and exact observational
  /// marginals.
  const EssentialGraph& essential() {
    if (!essential_) essential_ = essential_graph(instance_->dag());
    return *essential_;
  }
  const std::vector<std::vector<double>>& observational() {
    if (!observational_) observational_ = node_marginals(*instance_, Intervention::none(), opts_);
    return *observational_;
  }

  RunLog& log() noexcept { return log_; }
  RunLog take_log() { return std::move(log_); }

 private:
  const CausalInstance* instance_;
  AncestralSampler sampler_;
  Rng rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};
  std::int64_t horizon_;
  bool strict_;
  InferenceOptions opts_;
  std::int64_t t_ = 0;
  double cum_regret_ = 0;
  Stage stage_ = Stage::observe;
  std::vector<int> values_;
  std::map<Intervention, double> mu_cache_;
  std::optional<EssentialGraph> essential_;
  std::optional<std::vector<std::vector<double>>> observational_;
  RunLog log_;
};

/// UCB1 over `arms` until the horizon is reached. Each arm is played once,
/// then argmax mean + sqrt(2 ln t / N) with t the number of UCB pulls so
/// far; ties go to the lowest arm index.
inline void run_ucb(Environment& env, std::span<const Intervention> arms, Stage stage = Stage::stage3) {
  if (arms.empty()) throw InvalidConfig("UCB needs at least one arm");
  env.set_stage(stage);
  std::vector<double> sum(arms.size(), 0.0);
  std::vector<std::int64_t> count(arms.size(), 0);
  std::int64_t t = 0;
  while (!env.exhausted()) {
    std::size_t pick = 0;
    if (t < static_cast<std::int64_t>(arms.size())) {
      pick = static_cast<std::size_t>(t);
    } else {
      const double lt = std::log(static_cast<double>(t));
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < arms.size(); ++i) {
        const double n = static_cast<double>(count[i]);
        const double idx = sum[i] / n + std::sqrt(2.0 * lt / n);
        if (idx > best) {
          best = idx;
          pick = i;
        }
      }
    }
    sum[pick] += env.pull(arms[pick]).reward;
    ++count[pick];
    ++t;
  }
}

/// Baseline: UCB1 over the full action set for the whole horizon.
inline RunLog ucb_full(const CausalInstance& instance, std::uint64_t seed, std::int64_t horizon) {
  Environment env(instance, seed, horizon);
  const auto arms = instance.action_set();
  run_ucb(env, arms, Stage::stage3);
  RunLog log = env.take_log();
  log.outcome.algorithm = "ucb-full";
  log.outcome.stage3_arms = static_cast<int>(arms.size());
  return log;
}

}  // namespace cbandit
