#pragma once

// Discrete structural causal models: DAG + dense CPTs + a single reward
// generating node. Provides do-operator surgery, ancestral sampling, exact
// marginals by a topological frontier sweep, and the identifiability checks
// used by the causal bandit algorithms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace cbandit {

inline constexpr double kProbTolerance = 1e-9;

// ---------------------------------------------------------------------------
// CausalDag
// ---------------------------------------------------------------------------

class CausalDag {
 public:
  CausalDag() = default;

  explicit CausalDag(int node_count, std::vector<std::string> names = {})
      : parents_(static_cast<std::size_t>(node_count)),
        children_(static_cast<std::size_t>(node_count)),
        names_(std::move(names)) {
    if (node_count < 0) throw InvalidInstance("negative node count");
    if (names_.empty()) {
      names_.reserve(parents_.size());
      for (int v = 0; v < node_count; ++v) names_.push_back("X" + std::to_string(v + 1));
    }
    if (names_.size() != parents_.size())
      throw InvalidInstance("name count does not match node count");
  }

  int size() const noexcept { return static_cast<int>(parents_.size()); }

  /// Adds parent -> child. Rejects self loops, duplicates and bad indices;
  /// cycles are only detected by topological_order().
  void add_edge(int parent, int child) {
    check_node(parent);
    check_node(child);
    if (parent == child)
      throw InvalidInstance("self loop on " + names_[static_cast<std::size_t>(child)]);
    auto& pa = parents_[static_cast<std::size_t>(child)];
    auto it = std::lower_bound(pa.begin(), pa.end(), parent);
    if (it != pa.end() && *it == parent)
      throw InvalidInstance("duplicate edge " + std::to_string(parent) + " -> " +
                            std::to_string(child));
    pa.insert(it, parent);
    auto& ch = children_[static_cast<std::size_t>(parent)];
    ch.insert(std::lower_bound(ch.begin(), ch.end(), child), child);
  }

  void remove_parents(int child) {
    check_node(child);
    for (int p : parents_[static_cast<std::size_t>(child)]) {
      auto& ch = children_[static_cast<std::size_t>(p)];
      ch.erase(std::find(ch.begin(), ch.end(), child));
    }
    parents_[static_cast<std::size_t>(child)].clear();
  }

  bool has_edge(int parent, int child) const {
    check_node(parent);
    check_node(child);
    const auto& pa = parents_[static_cast<std::size_t>(child)];
    return std::binary_search(pa.begin(), pa.end(), parent);
  }

  bool adjacent(int u, int v) const { return has_edge(u, v) || has_edge(v, u); }

  /// Parents in ascending index order.
  const std::vector<int>& parents(int v) const {
    check_node(v);
    return parents_[static_cast<std::size_t>(v)];
  }
  const std::vector<int>& children(int v) const {
    check_node(v);
    return children_[static_cast<std::size_t>(v)];
  }
  const std::string& name(int v) const {
    check_node(v);
    return names_[static_cast<std::size_t>(v)];
  }
  const std::vector<std::string>& names() const noexcept { return names_; }

  /// All edges as (parent, child), sorted.
  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    for (int c = 0; c < size(); ++c)
      for (int p : parents_[static_cast<std::size_t>(c)]) out.emplace_back(p, c);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t edge_count() const {
    std::size_t m = 0;
    for (const auto& pa : parents_) m += pa.size();
    return m;
  }

  bool operator==(const CausalDag&) const = default;

 private:
  void check_node(int v) const {
    if (v < 0 || v >= size())
      throw InvalidInstance("node index " + std::to_string(v) + " out of range");
  }

  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::vector<std::string> names_;
};

/// Kahn's algorithm, ties broken by ascending node index.
inline std::vector<int> topological_order(const CausalDag& dag) {
  const int n = dag.size();
  std::vector<int> indeg(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) indeg[static_cast<std::size_t>(v)] = static_cast<int>(dag.parents(v).size());
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[static_cast<std::size_t>(v)] == 0) ready.push(v);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int c : dag.children(v))
      if (--indeg[static_cast<std::size_t>(c)] == 0) ready.push(c);
  }
  if (static_cast<int>(order.size()) != n)
    throw CycleDetected("graph has a directed cycle");
  return order;
}

/// Strict ancestors of v.
inline std::vector<int> ancestors(const CausalDag& dag, int v) {
  std::vector<char> seen(static_cast<std::size_t>(dag.size()), 0);
  std::vector<int> stack(dag.parents(v).begin(), dag.parents(v).end());
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(u)]) continue;
    seen[static_cast<std::size_t>(u)] = 1;
    for (int p : dag.parents(u)) stack.push_back(p);
  }
  std::vector<int> out;
  for (int u = 0; u < dag.size(); ++u)
    if (seen[static_cast<std::size_t>(u)]) out.push_back(u);
  return out;
}

/// Strict descendants of v.
inline std::vector<int> descendants(const CausalDag& dag, int v) {
  std::vector<char> seen(static_cast<std::size_t>(dag.size()), 0);
  std::vector<int> stack(dag.children(v).begin(), dag.children(v).end());
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(u)]) continue;
    seen[static_cast<std::size_t>(u)] = 1;
    for (int c : dag.children(u)) stack.push_back(c);
  }
  std::vector<int> out;
  for (int u = 0; u < dag.size(); ++u)
    if (seen[static_cast<std::size_t>(u)]) out.push_back(u);
  return out;
}

/// Canonical CPT parent order: parents sorted by position in
/// topological_order(dag). Used by the JSON format and the generators.
inline std::vector<int> topological_parent_order(const CausalDag& dag, int v,
                                                 std::span<const int> order) {
  std::vector<int> pos(static_cast<std::size_t>(dag.size()));
  for (std::size_t i = 0; i < order.size(); ++i) pos[static_cast<std::size_t>(order[i])] = static_cast<int>(i);
  std::vector<int> pa = dag.parents(v);
  std::sort(pa.begin(), pa.end(), [&](int a, int b) {
    return pos[static_cast<std::size_t>(a)] < pos[static_cast<std::size_t>(b)];
  });
  return pa;
}

// ---------------------------------------------------------------------------
// CPTs, reward model, interventions
// ---------------------------------------------------------------------------

/// Dense conditional probability table P(node | parents). Rows are indexed
/// by the mixed-radix parent configuration, first parent most significant.
struct Cpt {
  int node = 0;
  int domain_size = 0;
  std::vector<int> parents;
  std::vector<int> parent_domains;
  std::vector<double> table;

  std::size_t rows() const {
    std::size_t r = 1;
    for (int d : parent_domains) r *= static_cast<std::size_t>(d);
    return r;
  }

  std::span<const double> row(std::size_t r) const {
    return {table.data() + r * static_cast<std::size_t>(domain_size),
            static_cast<std::size_t>(domain_size)};
  }
  std::span<double> row(std::size_t r) {
    return {table.data() + r * static_cast<std::size_t>(domain_size),
            static_cast<std::size_t>(domain_size)};
  }

  double prob(std::size_t r, int value) const {
    return table[r * static_cast<std::size_t>(domain_size) + static_cast<std::size_t>(value)];
  }

  /// Row for a full assignment indexed by node id.
  std::size_t row_index(std::span<const int> values) const {
    std::size_t r = 0;
    for (std::size_t i = 0; i < parents.size(); ++i)
      r = r * static_cast<std::size_t>(parent_domains[i]) +
          static_cast<std::size_t>(values[static_cast<std::size_t>(parents[i])]);
    return r;
  }

  void validate() const {
    if (domain_size < 1) throw InvalidInstance("CPT of node " + std::to_string(node) + " has empty domain");
    if (parents.size() != parent_domains.size())
      throw InvalidInstance("CPT of node " + std::to_string(node) + " has mismatched parent domains");
    if (table.size() != rows() * static_cast<std::size_t>(domain_size))
      throw InvalidInstance("CPT of node " + std::to_string(node) + " has " +
                            std::to_string(table.size()) + " cells, expected " +
                            std::to_string(rows() * static_cast<std::size_t>(domain_size)));
    for (std::size_t r = 0; r < rows(); ++r) {
      double s = 0;
      for (double p : row(r)) {
        if (!(p >= 0.0 && p <= 1.0))
          throw InvalidInstance("CPT of node " + std::to_string(node) + " has entry outside [0,1]");
        s += p;
      }
      if (std::abs(s - 1.0) > kProbTolerance)
        throw InvalidInstance("CPT of node " + std::to_string(node) + " row " + std::to_string(r) +
                              " sums to " + std::to_string(s));
    }
  }

  static Cpt point_mass(int node, int domain, int value) {
    Cpt c;
    c.node = node;
    c.domain_size = domain;
    c.table.assign(static_cast<std::size_t>(domain), 0.0);
    c.table[static_cast<std::size_t>(value)] = 1.0;
    return c;
  }

  bool operator==(const Cpt&) const = default;
};

struct RewardModel {
  int node = 0;
  std::vector<double> value_means;
  bool operator==(const RewardModel&) const = default;
};

/// The values a learner may set a node to: {first, ..., first + count - 1}.
struct ActionDomain {
  int first = 0;
  int count = 0;
  int value(int k) const noexcept { return first + k; }
  bool contains(int v) const noexcept { return v >= first && v < first + count; }
  bool operator==(const ActionDomain&) const = default;
};

struct AssumptionMargins {
  double epsilon_margin = 0.0;  // causal-effect margin
  double delta_gap = 0.0;       // reward-gap margin

  void validate() const {
    if (!(epsilon_margin > 0.0) || !(delta_gap > 0.0))
      throw InvalidConfig("assumption margins must be strictly positive");
  }
};

/// do() or do(node = value).
class Intervention {
 public:
  Intervention() = default;

  static Intervention none() { return {}; }
  static Intervention set(int node, int value) {
    if (node < 0 || value < 0)
      throw InvalidIntervention("negative node or value");
    Intervention a;
    a.node_ = node;
    a.value_ = value;
    return a;
  }

  bool empty() const noexcept { return node_ < 0; }
  int node() const noexcept { return node_; }
  int value() const noexcept { return value_; }

  std::string to_string() const {
    if (empty()) return "do()";
    return "do(" + std::to_string(node_) + "=" + std::to_string(value_) + ")";
  }

  auto operator<=>(const Intervention&) const = default;

 private:
  int node_ = -1;
  int value_ = -1;
};

// ---------------------------------------------------------------------------
// CausalInstance
// ---------------------------------------------------------------------------

/// The ground-truth environment. Immutable once constructed.
class CausalInstance {
 public:
  CausalInstance() = default;

  CausalInstance(CausalDag dag, std::vector<Cpt> cpts, RewardModel reward,
                 std::optional<ActionDomain> actions = std::nullopt)
      : dag_(std::move(dag)), cpts_(std::move(cpts)), reward_(std::move(reward)) {
    const int n = dag_.size();
    if (n < 1) throw InvalidInstance("instance needs at least one node");
    order_ = topological_order(dag_);
    if (static_cast<int>(cpts_.size()) != n)
      throw InvalidInstance("expected one CPT per node");
    domains_.resize(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) domains_[static_cast<std::size_t>(v)] = cpts_[static_cast<std::size_t>(v)].domain_size;
    for (int v = 0; v < n; ++v) {
      const Cpt& c = cpts_[static_cast<std::size_t>(v)];
      if (c.node != v) throw InvalidInstance("CPT " + std::to_string(v) + " is labelled for node " + std::to_string(c.node));
      std::vector<int> a = c.parents, b = dag_.parents(v);
      std::sort(a.begin(), a.end());
      if (a != b) throw InvalidInstance("CPT parents of node " + std::to_string(v) + " do not match the DAG");
      for (std::size_t i = 0; i < c.parents.size(); ++i)
        if (c.parent_domains[i] != domains_[static_cast<std::size_t>(c.parents[i])])
          throw InvalidInstance("CPT of node " + std::to_string(v) + " uses a wrong parent domain");
      c.validate();
    }
    if (reward_.node < 0 || reward_.node >= n) throw InvalidInstance("reward node out of range");
    if (static_cast<int>(reward_.value_means.size()) != domains_[static_cast<std::size_t>(reward_.node)])
      throw InvalidInstance("reward means must match the reward node's domain size");
    for (double m : reward_.value_means)
      if (!(m >= 0.0 && m <= 1.0)) throw InvalidInstance("reward means must lie in [0,1]");
    if (actions) {
      actions_ = *actions;
    } else {
      actions_.first = 0;
      actions_.count = *std::min_element(domains_.begin(), domains_.end());
    }
    if (actions_.count < 1 || actions_.first < 0) throw InvalidInstance("empty action domain");
    for (int d : domains_)
      if (actions_.first + actions_.count > d) throw InvalidInstance("action domain exceeds a node domain");
  }

  int size() const noexcept { return dag_.size(); }
  const CausalDag& dag() const noexcept { return dag_; }
  const std::vector<Cpt>& cpts() const noexcept { return cpts_; }
  const Cpt& cpt(int v) const { return cpts_.at(static_cast<std::size_t>(v)); }
  const RewardModel& reward() const noexcept { return reward_; }
  const ActionDomain& actions() const noexcept { return actions_; }
  int domain(int v) const { return domains_.at(static_cast<std::size_t>(v)); }
  const std::vector<int>& domains() const noexcept { return domains_; }
  const std::vector<int>& order() const noexcept { return order_; }

  void check(const Intervention& a) const {
    if (a.empty()) return;
    if (a.node() < 0 || a.node() >= size())
      throw InvalidIntervention("node " + std::to_string(a.node()) + " out of range");
    if (a.value() < 0 || a.value() >= domain(a.node()))
      throw InvalidIntervention("value " + std::to_string(a.value()) + " outside the domain of node " +
                                std::to_string(a.node()));
  }

  /// All single-node interventions over the action domain, node-major.
  std::vector<Intervention> action_set() const {
    std::vector<Intervention> out;
    out.reserve(static_cast<std::size_t>(size() * actions_.count));
    for (int v = 0; v < size(); ++v)
      for (int k = 0; k < actions_.count; ++k) out.push_back(Intervention::set(v, actions_.value(k)));
    return out;
  }

  bool operator==(const CausalInstance& o) const {
    return dag_ == o.dag_ && cpts_ == o.cpts_ && reward_ == o.reward_ && actions_ == o.actions_;
  }

 private:
  CausalDag dag_;
  std::vector<Cpt> cpts_;
  RewardModel reward_;
  ActionDomain actions_;
  std::vector<int> domains_;
  std::vector<int> order_;
};

/// Graph surgery: the intervened node loses its parents and gets a point
/// mass CPT. do() returns an identical copy.
inline CausalInstance mutilate(const CausalInstance& instance, const Intervention& a) {
  instance.check(a);
  if (a.empty()) return instance;
  CausalDag dag = instance.dag();
  dag.remove_parents(a.node());
  std::vector<Cpt> cpts = instance.cpts();
  cpts[static_cast<std::size_t>(a.node())] =
      Cpt::point_mass(a.node(), instance.domain(a.node()), a.value());
  return CausalInstance(std::move(dag), std::move(cpts), instance.reward(), instance.actions());
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Ancestral sampler with precomputed cumulative rows. Sampling under an
/// intervention is equivalent to sampling mutilate(instance, a).
class AncestralSampler {
 public:
  explicit AncestralSampler(const CausalInstance& instance) : instance_(&instance) {
    cumulative_.resize(static_cast<std::size_t>(instance.size()));
    for (int v = 0; v < instance.size(); ++v) {
      const Cpt& c = instance.cpt(v);
      auto& cum = cumulative_[static_cast<std::size_t>(v)];
      cum.resize(c.table.size());
      for (std::size_t r = 0; r < c.rows(); ++r) {
        double s = 0;
        for (int x = 0; x < c.domain_size; ++x) {
          s += c.prob(r, x);
          cum[r * static_cast<std::size_t>(c.domain_size) + static_cast<std::size_t>(x)] = s;
        }
      }
    }
  }

  /// Fills `values` (size n) and returns the noise-free reward mean of the
  /// sampled reward-node value.
  double draw(const Intervention& a, Rng& rng, std::span<int> values) const {
    const CausalInstance& inst = *instance_;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int v : inst.order()) {
      if (!a.empty() && v == a.node()) {
        values[static_cast<std::size_t>(v)] = a.value();
        continue;
      }
      const Cpt& c = inst.cpt(v);
      const std::size_t r = c.row_index(values);
      const double* cum = cumulative_[static_cast<std::size_t>(v)].data() + r * static_cast<std::size_t>(c.domain_size);
      const double u = unif(rng) * cum[c.domain_size - 1];
      int x = 0;
      while (x + 1 < c.domain_size && u >= cum[x]) ++x;
      // skip zero-probability values that share a cumulative boundary
      while (x + 1 < c.domain_size && c.prob(r, x) == 0.0) ++x;
      values[static_cast<std::size_t>(v)] = x;
    }
    return inst.reward().value_means[static_cast<std::size_t>(values[static_cast<std::size_t>(inst.reward().node)])];
  }

 private:
  const CausalInstance* instance_;
  std::vector<std::vector<double>> cumulative_;
};

struct Sample {
  std::vector<int> values;
  double reward = 0.0;
};

/// `count` i.i.d. draws from mutilate(instance, a); reward = mean of the
/// sampled reward-node value plus N(0,1) noise. Deterministic in `seed`.
inline std::vector<Sample> sample(const CausalInstance& instance, const Intervention& a,
                                  std::uint64_t seed, std::size_t count) {
  instance.check(a);
  if (count < 1) throw InvalidConfig("sample count must be at least 1");
  AncestralSampler sampler(instance);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Sample> out(count);
  for (auto& s : out) {
    s.values.resize(static_cast<std::size_t>(instance.size()));
    s.reward = sampler.draw(a, rng, s.values) + noise(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact inference
// ---------------------------------------------------------------------------

struct InferenceOptions {
  std::size_t max_cells = 100'000'000;
};

namespace detail {

/// Joint table over a set of variables, last variable fastest.
struct Factor {
  std::vector<int> vars;
  std::vector<int> dims;
  std::vector<double> table{1.0};

  std::size_t position(int v) const {
    return static_cast<std::size_t>(std::find(vars.begin(), vars.end(), v) - vars.begin());
  }
};

inline void extend(Factor& f, int v, int dom, const Cpt* cpt, int fixed_value) {
  const std::size_t old_size = f.table.size();
  std::vector<double> out(old_size * static_cast<std::size_t>(dom), 0.0);
  std::vector<std::size_t> parent_pos;
  if (cpt)
    for (int p : cpt->parents) parent_pos.push_back(f.position(p));
  std::vector<int> digits(f.vars.size(), 0);
  for (std::size_t idx = 0; idx < old_size; ++idx) {
    const double w = f.table[idx];
    if (w != 0.0) {
      double* dst = out.data() + idx * static_cast<std::size_t>(dom);
      if (!cpt) {
        dst[fixed_value] = w;
      } else {
        std::size_t r = 0;
        for (std::size_t i = 0; i < parent_pos.size(); ++i)
          r = r * static_cast<std::size_t>(cpt->parent_domains[i]) +
              static_cast<std::size_t>(digits[parent_pos[i]]);
        const auto row = cpt->row(r);
        for (int x = 0; x < dom; ++x) dst[x] = w * row[static_cast<std::size_t>(x)];
      }
    }
    for (std::size_t i = digits.size(); i-- > 0;) {
      if (++digits[i] < f.dims[i]) break;
      digits[i] = 0;
    }
  }
  f.vars.push_back(v);
  f.dims.push_back(dom);
  f.table = std::move(out);
}

inline std::vector<double> marginal(const Factor& f, std::size_t pos) {
  std::size_t after = 1;
  for (std::size_t i = pos + 1; i < f.dims.size(); ++i) after *= static_cast<std::size_t>(f.dims[i]);
  const std::size_t d = static_cast<std::size_t>(f.dims[pos]);
  const std::size_t before = f.table.size() / (d * after);
  std::vector<double> m(d, 0.0);
  for (std::size_t b = 0; b < before; ++b)
    for (std::size_t x = 0; x < d; ++x) {
      const double* src = f.table.data() + (b * d + x) * after;
      double s = 0;
      for (std::size_t i = 0; i < after; ++i) s += src[i];
      m[x] += s;
    }
  return m;
}

inline void sum_out(Factor& f, std::size_t pos) {
  std::size_t after = 1;
  for (std::size_t i = pos + 1; i < f.dims.size(); ++i) after *= static_cast<std::size_t>(f.dims[i]);
  const std::size_t d = static_cast<std::size_t>(f.dims[pos]);
  const std::size_t before = f.table.size() / (d * after);
  std::vector<double> out(before * after, 0.0);
  for (std::size_t b = 0; b < before; ++b)
    for (std::size_t x = 0; x < d; ++x) {
      const double* src = f.table.data() + (b * d + x) * after;
      double* dst = out.data() + b * after;
      for (std::size_t i = 0; i < after; ++i) dst[i] += src[i];
    }
  f.vars.erase(f.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  f.dims.erase(f.dims.begin() + static_cast<std::ptrdiff_t>(pos));
  f.table = std::move(out);
}

/// Sweeps the relevant nodes of mutilate(instance, a) in a topological
/// order, keeping the joint of the frontier (processed nodes with pending
/// children). Among ready nodes the one giving the smallest frontier is
/// taken next. `visit(v, marginal)` fires once per relevant node.
template <class Visit>
void frontier_sweep(const CausalInstance& inst, const Intervention& a, std::span<const char> relevant,
                    const InferenceOptions& opts, Visit&& visit) {
  const int n = inst.size();
  auto parents_of = [&](int v) -> std::span<const int> {
    if (!a.empty() && v == a.node()) return {};
    return inst.cpt(v).parents;
  };
  std::vector<int> pending(static_cast<std::size_t>(n), 0);
  std::vector<int> missing(static_cast<std::size_t>(n), 0);
  int remaining = 0;
  for (int v = 0; v < n; ++v) {
    if (!relevant[static_cast<std::size_t>(v)]) continue;
    ++remaining;
    for (int p : parents_of(v)) {
      ++pending[static_cast<std::size_t>(p)];
      ++missing[static_cast<std::size_t>(v)];
    }
  }
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  Factor f;
  while (remaining > 0) {
    int best = -1;
    double best_cost = 0;
    for (int v = 0; v < n; ++v) {
      if (!relevant[static_cast<std::size_t>(v)] || done[static_cast<std::size_t>(v)] ||
          missing[static_cast<std::size_t>(v)] != 0)
        continue;
      double cost = static_cast<double>(f.table.size()) * inst.domain(v);
      for (int p : parents_of(v))
        if (pending[static_cast<std::size_t>(p)] == 1) cost /= inst.domain(p);
      if (pending[static_cast<std::size_t>(v)] == 0) cost /= inst.domain(v);
      if (best < 0 || cost < best_cost) {
        best = v;
        best_cost = cost;
      }
    }
    const int v = best;
    const std::size_t cells = f.table.size() * static_cast<std::size_t>(inst.domain(v));
    if (cells > opts.max_cells)
      throw InstanceTooLarge("frontier table needs " + std::to_string(cells) + " cells (cap " +
                             std::to_string(opts.max_cells) + ")");
    const bool fixed = !a.empty() && v == a.node();
    extend(f, v, inst.domain(v), fixed ? nullptr : &inst.cpt(v), fixed ? a.value() : 0);
    visit(v, marginal(f, f.vars.size() - 1));
    done[static_cast<std::size_t>(v)] = 1;
    --remaining;
    for (int c : inst.dag().children(v))
      if (relevant[static_cast<std::size_t>(c)] && !(!a.empty() && c == a.node()))
        --missing[static_cast<std::size_t>(c)];
    for (int p : parents_of(v))
      if (--pending[static_cast<std::size_t>(p)] == 0) sum_out(f, f.position(p));
    if (pending[static_cast<std::size_t>(v)] == 0) sum_out(f, f.position(v));
  }
}

}  // namespace detail

/// Exact marginals of every node under mutilate(instance, a).
inline std::vector<std::vector<double>> node_marginals(const CausalInstance& instance,
                                                       const Intervention& a,
                                                       const InferenceOptions& opts = {}) {
  instance.check(a);
  std::vector<char> relevant(static_cast<std::size_t>(instance.size()), 1);
  std::vector<std::vector<double>> out(static_cast<std::size_t>(instance.size()));
  detail::frontier_sweep(instance, a, relevant, opts,
                         [&](int v, std::vector<double> m) { out[static_cast<std::size_t>(v)] = std::move(m); });
  return out;
}

/// Exact distribution of `target` under mutilate(instance, a). Only the
/// ancestral set of the target is swept.
inline std::vector<double> exact_marginal(const CausalInstance& instance, const Intervention& a, int target,
                                          const InferenceOptions& opts = {}) {
  instance.check(a);
  if (target < 0 || target >= instance.size())
    throw InvalidIntervention("target node " + std::to_string(target) + " out of range");
  std::vector<char> relevant(static_cast<std::size_t>(instance.size()), 0);
  std::vector<int> stack{target};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (relevant[static_cast<std::size_t>(u)]) continue;
    relevant[static_cast<std::size_t>(u)] = 1;
    if (!a.empty() && u == a.node()) continue;
    for (int p : instance.dag().parents(u)) stack.push_back(p);
  }
  std::vector<double> out;
  detail::frontier_sweep(instance, a, relevant, opts, [&](int v, std::vector<double> m) {
    if (v == target) out = std::move(m);
  });
  return out;
}

/// mu_a = sum_k P(X_R = k | a) * value_means[k].
inline double expected_reward(const CausalInstance& instance, const Intervention& a,
                              const InferenceOptions& opts = {}) {
  const auto m = exact_marginal(instance, a, instance.reward().node, opts);
  double mu = 0;
  for (std::size_t k = 0; k < m.size(); ++k) mu += m[k] * instance.reward().value_means[k];
  return std::clamp(mu, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Identifiability assumptions
// ---------------------------------------------------------------------------

struct AssumptionReport {
  bool assumption2 = true;
  /// First edge (parent, child) whose strongest interventional effect is
  /// not above the margin.
  std::optional<std::pair<int, int>> violating_edge;
  /// min over edges of max_{x,x'} |P(X_j=x|do(X_i=x')) - P(X_j=x)|.
  double weakest_edge_effect = 1.0;

  bool assumption3 = true;
  /// First ancestor of X_R (X_R included) without a reward gap >= margin.
  std::optional<int> violating_ancestor;
  /// min over ancestors of max_x |E[R|do()] - E[R|do(X=x)]|.
  double smallest_reward_gap = 1.0;

  bool passed() const noexcept { return assumption2 && assumption3; }
};

/// Checks the causal-effect margin on every edge (values range over the full
/// node domains) and the reward gap on every ancestor of the reward node,
/// the reward node itself included (values range over the action domain).
inline AssumptionReport validate_assumptions(const CausalInstance& instance, const AssumptionMargins& margins,
                                             const InferenceOptions& opts = {}) {
  margins.validate();
  AssumptionReport rep;
  const CausalDag& dag = instance.dag();
  const auto obs = node_marginals(instance, Intervention::none(), opts);
  const int n = instance.size();

  std::vector<double> best_effect(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (dag.children(i).empty()) continue;
    for (int xp = 0; xp < instance.domain(i); ++xp) {
      const auto post = node_marginals(instance, Intervention::set(i, xp), opts);
      for (int j : dag.children(i)) {
        double& e = best_effect[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
        for (int x = 0; x < instance.domain(j); ++x)
          e = std::max(e, std::abs(post[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)] -
                                   obs[static_cast<std::size_t>(j)][static_cast<std::size_t>(x)]));
      }
    }
  }
  for (auto [i, j] : dag.edges()) {
    const double e = best_effect[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    rep.weakest_edge_effect = std::min(rep.weakest_edge_effect, e);
    if (!(e > margins.epsilon_margin) && rep.assumption2) {
      rep.assumption2 = false;
      rep.violating_edge = std::make_pair(i, j);
    }
  }

  const int xr = instance.reward().node;
  std::vector<int> an = ancestors(dag, xr);
  an.insert(std::lower_bound(an.begin(), an.end(), xr), xr);
  auto mean_of = [&](const std::vector<double>& m) {
    double mu = 0;
    for (std::size_t k = 0; k < m.size(); ++k) mu += m[k] * instance.reward().value_means[k];
    return mu;
  };
  const double base = mean_of(obs[static_cast<std::size_t>(xr)]);
  for (int x : an) {
    double gap = 0;
    for (int k = 0; k < instance.actions().count; ++k) {
      const auto m = exact_marginal(instance, Intervention::set(x, instance.actions().value(k)), xr, opts);
      gap = std::max(gap, std::abs(base - mean_of(m)));
    }
    rep.smallest_reward_gap = std::min(rep.smallest_reward_gap, gap);
    if (!(gap >= margins.delta_gap) && rep.assumption3) {
      rep.assumption3 = false;
      rep.violating_ancestor = x;
    }
  }
  return rep;
}

}  // namespace cbandit
