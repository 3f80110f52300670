#pragma once

// Batch experiments: generate instances, run an algorithm matrix over
// seeds in a worker pool, write per-run CSVs and a deterministic summary.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bandit.hpp"
#include "cn_ucb.hpp"
#include "errors.hpp"
#include "instance_gen.hpp"
#include "instance_json.hpp"
#include "rng.hpp"

namespace cbandit {

struct GeneratorEntry {
  std::string id;  // unique within a spec; names files and seeds
  GeneratorSpec spec;
};

struct ExperimentSpec {
  std::vector<GeneratorEntry> generators;
  std::vector<std::string> algorithms;
  std::int64_t horizon = 10000;
  std::vector<int> seeds;  // seed indices
  double delta = 0.1;
  AssumptionMargins margins{0.3, 0.3};
  std::optional<std::int64_t> B;
  std::uint64_t master_seed = 0;
  std::string out_dir = "out";
  int jobs = 1;
  std::int64_t csv_stride = 1;
  std::int64_t curve_points = 500;
  bool write_instances = true;

  void validate() const {
    if (generators.empty()) throw ConfigError("at least one generator is required");
    if (algorithms.empty()) throw ConfigError("at least one algorithm is required");
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (csv_stride < 1 || curve_points < 1) throw ConfigError("csv_stride and curve_points must be positive");
    std::vector<std::string> ids;
    for (const auto& g : generators) ids.push_back(g.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) throw ConfigError("generator ids must be unique");
    for (const auto& a : algorithms)
      if (a != "cn-ucb-tree" && a != "cn-ucb-forest" && a != "cn-ucb-general" && a != "ucb-full")
        throw ConfigError("unknown algorithm '" + a + "'");
    margins.validate();
  }
};

inline std::string default_generator_id(const GeneratorSpec& g) {
  if (g.family == "figure1") return "figure1";
  std::string id = g.family + "_n" + std::to_string(g.n);
  if (g.family == "lower_bound_thm4" || g.family == "lower_bound_thm5") id += "_i" + std::to_string(g.index);
  return id;
}

inline std::uint64_t instance_seed(std::uint64_t master, const std::string& gen_id, int seed_index) {
  return mix_seed({master, fnv1a(gen_id), static_cast<std::uint64_t>(seed_index)});
}

inline std::uint64_t run_seed(std::uint64_t master, const std::string& gen_id, const std::string& algo, int seed_index) {
  return mix_seed({master, fnv1a(gen_id), fnv1a(algo), static_cast<std::uint64_t>(seed_index)});
}

// ---------------------------------------------------------------------------
// Spec JSON
// ---------------------------------------------------------------------------

inline GeneratorSpec generator_from_json(const Json& j, const AssumptionMargins& margins, std::int64_t horizon) {
  GeneratorSpec g;
  g.margins = margins;
  g.T = horizon;
  g.family = j.value("family", g.family);
  g.n = j.value("n", g.n);
  g.K = j.value("K", j.value("k", g.K));
  g.max_degree = j.value("max_degree", g.max_degree);
  g.components = j.value("components", g.components);
  g.max_clique = j.value("max_clique", g.max_clique);
  g.proper_interval = j.value("proper_interval", g.proper_interval);
  g.require_incomparable = j.value("require_incomparable", g.require_incomparable);
  g.T = j.value("T", g.T);
  g.index = j.value("index", g.index);
  g.attempts = j.value("attempts", g.attempts);
  if (j.contains("eps_margin")) g.margins.epsilon_margin = j.at("eps_margin").get<double>();
  if (j.contains("delta_gap")) g.margins.delta_gap = j.at("delta_gap").get<double>();
  return g;
}

inline Json generator_to_json(const GeneratorEntry& e) {
  const GeneratorSpec& g = e.spec;
  return {{"id", e.id},
          {"family", g.family},
          {"n", g.n},
          {"K", g.K},
          {"max_degree", g.max_degree},
          {"components", g.components},
          {"max_clique", g.max_clique},
          {"proper_interval", g.proper_interval},
          {"require_incomparable", g.require_incomparable},
          {"T", g.T},
          {"index", g.index},
          {"eps_margin", g.margins.epsilon_margin},
          {"delta_gap", g.margins.delta_gap}};
}

/// Reads an experiment spec; unspecified fields keep their defaults.
inline ExperimentSpec spec_from_json(const Json& j) {
  try {
    ExperimentSpec s;
    s.horizon = j.value("horizon", s.horizon);
    s.delta = j.value("delta", s.delta);
    s.margins.epsilon_margin = j.value("eps_margin", s.margins.epsilon_margin);
    s.margins.delta_gap = j.value("delta_gap", s.margins.delta_gap);
    if (j.contains("B")) s.B = j.at("B").get<std::int64_t>();
    s.master_seed = j.value("master_seed", s.master_seed);
    s.out_dir = j.value("out", s.out_dir);
    s.jobs = j.value("jobs", s.jobs);
    s.csv_stride = j.value("csv_stride", s.csv_stride);
    s.curve_points = j.value("curve_points", s.curve_points);
    s.write_instances = j.value("write_instances", s.write_instances);
    s.algorithms = j.value("algorithms", std::vector<std::string>{});
    if (j.contains("seeds")) {
      const Json& sj = j.at("seeds");
      if (sj.is_number_integer()) {
        for (int i = 0; i < sj.get<int>(); ++i) s.seeds.push_back(i);
      } else {
        s.seeds = sj.get<std::vector<int>>();
      }
    }
    for (const Json& g : j.value("generators", Json::array())) {
      GeneratorEntry e;
      e.spec = generator_from_json(g, s.margins, s.horizon);
      e.id = g.value("id", default_generator_id(e.spec));
      s.generators.push_back(std::move(e));
    }
    return s;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad experiment spec: ") + e.what());
  }
}

inline Json spec_to_json(const ExperimentSpec& s) {
  Json j;
  j["horizon"] = s.horizon;
  j["delta"] = s.delta;
  j["eps_margin"] = s.margins.epsilon_margin;
  j["delta_gap"] = s.margins.delta_gap;
  if (s.B) j["B"] = *s.B;
  j["master_seed"] = s.master_seed;
  j["csv_stride"] = s.csv_stride;
  j["curve_points"] = s.curve_points;
  j["algorithms"] = s.algorithms;
  j["seeds"] = s.seeds;
  j["generators"] = Json::array();
  for (const auto& g : s.generators) j["generators"].push_back(generator_to_json(g));
  return j;
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

/// Runs task(i) for i in [0, count) on `jobs` threads. Tasks must write only
/// to their own slots; exceptions are the task's responsibility.
inline void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct RunResult {
  std::string generator;
  std::string algorithm;
  int seed_index = 0;
  std::uint64_t instance_seed = 0;
  std::uint64_t run_seed = 0;
  bool ok = false;
  std::string error_type;
  std::string error;
  double final_regret = 0;
  double mu_star = 0;
  std::optional<bool> success;  // identification; absent for ucb-full
  StageOutcome outcome;
  std::string csv;  // relative to out_dir
  std::vector<double> curve;  // cum_regret at curve_t points
};

struct ExperimentResult {
  Json summary;
  std::vector<RunResult> runs;
  int errors = 0;
};

namespace detail {

inline std::string error_type(const std::exception& e) {
  if (dynamic_cast<const GenerationTimeout*>(&e)) return "GenerationTimeout";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const InvalidConfig*>(&e)) return "InvalidConfig";
  if (dynamic_cast<const InstanceTooLarge*>(&e)) return "InstanceTooLarge";
  if (dynamic_cast<const InvalidInstance*>(&e)) return "InvalidInstance";
  if (dynamic_cast<const HorizonExceeded*>(&e)) return "HorizonExceeded";
  if (dynamic_cast<const NotATree*>(&e)) return "NotATree";
  if (dynamic_cast<const NotChordal*>(&e)) return "NotChordal";
  return "Error";
}

inline std::vector<std::int64_t> curve_grid(std::int64_t horizon, std::int64_t points) {
  const std::int64_t step = std::max<std::int64_t>(1, horizon / points);
  std::vector<std::int64_t> t;
  for (std::int64_t x = step; x <= horizon; x += step) t.push_back(x);
  if (t.empty() || t.back() != horizon) t.push_back(horizon);
  return t;
}

inline std::optional<bool> identification_success(const StageOutcome& out, const GroundTruth& truth) {
  if (out.algorithm == "ucb-full") return std::nullopt;
  if (out.algorithm == "cn-ucb-general") {
    if (!out.identified_clique) return false;
    const auto& c = *out.identified_clique;
    return std::find(c.begin(), c.end(), truth.reward_node) != c.end();
  }
  return out.identified_node && *out.identified_node == truth.reward_node;
}

inline Json outcome_to_json(const StageOutcome& o) {
  Json j;
  j["algorithm"] = o.algorithm;
  j["identified_node"] = o.identified_node ? Json(*o.identified_node) : Json(nullptr);
  j["identified_clique"] = o.identified_clique ? Json(*o.identified_clique) : Json(nullptr);
  j["fallback"] = o.fallback;
  j["rounds"] = {{"observe", o.rounds[0]}, {"stage1", o.rounds[1]}, {"stage2", o.rounds[2]}, {"stage3", o.rounds[3]}};
  j["exploration_rounds"] = o.exploration_rounds();
  j["stage3_arms"] = o.stage3_arms;
  j["B"] = o.budget;
  j["budget_cap"] = o.budget_cap;
  j["orientations"] = Json::array();
  for (auto [a, b] : o.orientations) j["orientations"].push_back({a, b});
  j["eliminations"] = Json::array();
  for (const auto& e : o.eliminations)
    j["eliminations"].push_back({{"stage", stage_name(e.stage)},
                                 {"component", e.component},
                                 {"iteration", e.iteration},
                                 {"nodes", e.nodes},
                                 {"rule", rule_name(e.rule)}});
  j["iterations"] = Json::array();
  for (const auto& it : o.iterations)
    j["iterations"].push_back({{"stage", stage_name(it.stage)},
                               {"component", it.component},
                               {"iteration", it.iteration},
                               {"central", it.central},
                               {"ancestor", it.ancestor},
                               {"support_before", it.support_before},
                               {"support_after", it.support_after},
                               {"eliminated_mass", it.eliminated_mass}});
  return j;
}

struct Stats {
  double mean = 0, stddev = 0, min = 0, max = 0;
};

inline Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

inline std::string run_file(const std::string& gen, const std::string& algo, int seed) {
  return "runs/" + gen + "__" + algo + "__seed" + std::to_string(seed) + ".csv";
}

}  // namespace detail

/// Executes every (generator, seed, algorithm) run. Each generator/seed pair
/// yields one instance shared by all algorithms. Failed runs are listed in
/// errors.json and counted in the result; the others are still written.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  namespace fs = std::filesystem;
  const fs::path out(spec.out_dir);
  fs::create_directories(out / "runs");
  if (spec.write_instances) fs::create_directories(out / "instances");

  const std::size_t G = spec.generators.size(), S = spec.seeds.size(), A = spec.algorithms.size();

  struct Slot {
    std::optional<GeneratedInstance> inst;
    std::string error_type, error;
    std::uint64_t seed = 0;
  };
  std::vector<Slot> instances(G * S);
  parallel_for(G * S, spec.jobs, [&](std::size_t i) {
    const auto& ge = spec.generators[i / S];
    const int si = spec.seeds[i % S];
    Slot& slot = instances[i];
    slot.seed = instance_seed(spec.master_seed, ge.id, si);
    try {
      GeneratorSpec g = ge.spec;
      g.seed = slot.seed;
      slot.inst = generate(g);
      if (spec.write_instances) {
        const std::string base = (out / "instances" / (ge.id + "__seed" + std::to_string(si))).string();
        write_file(base + ".json", instance_to_string(slot.inst->instance));
        write_file(base + ".truth.json", ground_truth_to_json(slot.inst->truth).dump(2) + "\n");
      }
    } catch (const std::exception& e) {
      slot.error_type = detail::error_type(e);
      slot.error = e.what();
    }
  });

  const auto grid = detail::curve_grid(spec.horizon, spec.curve_points);
  ExperimentResult result;
  result.runs.resize(G * S * A);
  parallel_for(G * S * A, spec.jobs, [&](std::size_t i) {
    const std::size_t gs = i / A;
    const auto& ge = spec.generators[gs / S];
    const int si = spec.seeds[gs % S];
    const std::string& algo = spec.algorithms[i % A];
    RunResult& r = result.runs[i];
    r.generator = ge.id;
    r.algorithm = algo;
    r.seed_index = si;
    r.instance_seed = instances[gs].seed;
    r.run_seed = run_seed(spec.master_seed, ge.id, algo, si);
    if (!instances[gs].inst) {
      r.error_type = instances[gs].error_type;
      r.error = instances[gs].error;
      return;
    }
    try {
      const GeneratedInstance& gi = *instances[gs].inst;
      AlgoConfig cfg;
      cfg.K = gi.instance.actions().count;
      cfg.delta = spec.delta;
      cfg.margins = spec.margins;
      cfg.horizon = spec.horizon;
      cfg.B = spec.B;
      RunLog log = run_algorithm(algo, gi.instance, cfg, r.run_seed);
      r.csv = detail::run_file(ge.id, algo, si);
      std::ofstream f(out / r.csv, std::ios::binary);
      if (!f) throw ConfigError("cannot write " + (out / r.csv).string());
      log.write_csv(f, ge.id + "__" + algo + "__seed" + std::to_string(si), spec.csv_stride);
      r.final_regret = log.final_regret();
      r.mu_star = log.mu_star;
      r.success = detail::identification_success(log.outcome, gi.truth);
      for (std::int64_t t : grid) r.curve.push_back(log.records[static_cast<std::size_t>(t - 1)].cum_regret);
      r.outcome = std::move(log.outcome);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error_type = detail::error_type(e);
      r.error = e.what();
    }
  });

  Json summary;
  summary["spec"] = spec_to_json(spec);
  summary["curve_t"] = grid;
  summary["groups"] = Json::array();
  Json manifest = Json::array();
  Json runs = Json::array();
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t a = 0; a < A; ++a) {
      std::vector<double> finals;
      std::vector<std::vector<double>> curves;
      int successes = 0, judged = 0;
      std::array<double, 4> rounds{};
      double exploration = 0;
      for (std::size_t s = 0; s < S; ++s) {
        const RunResult& r = result.runs[(g * S + s) * A + a];
        Json rj = {{"generator", r.generator}, {"algorithm", r.algorithm}, {"seed", r.seed_index},
                   {"instance_seed", r.instance_seed}, {"run_seed", r.run_seed}};
        if (!r.ok) {
          rj["error"] = r.error;
          rj["error_type"] = r.error_type;
          manifest.push_back(rj);
          runs.push_back(std::move(rj));
          ++result.errors;
          continue;
        }
        rj["csv"] = r.csv;
        rj["final_regret"] = r.final_regret;
        rj["mu_star"] = r.mu_star;
        rj["success"] = r.success ? Json(*r.success) : Json(nullptr);
        rj["outcome"] = detail::outcome_to_json(r.outcome);
        runs.push_back(std::move(rj));
        finals.push_back(r.final_regret);
        curves.push_back(r.curve);
        if (r.success) {
          ++judged;
          successes += *r.success ? 1 : 0;
        }
        for (std::size_t k = 0; k < 4; ++k) rounds[k] += static_cast<double>(r.outcome.rounds[k]);
        exploration += static_cast<double>(r.outcome.exploration_rounds());
      }
      const auto st = detail::stats(finals);
      const double cnt = std::max<double>(1.0, static_cast<double>(finals.size()));
      Json gj;
      gj["generator"] = spec.generators[g].id;
      gj["family"] = spec.generators[g].spec.family;
      gj["n"] = spec.generators[g].spec.n;
      gj["algorithm"] = spec.algorithms[a];
      gj["runs"] = finals.size();
      gj["final_regret"] = {{"mean", st.mean}, {"stddev", st.stddev}, {"min", st.min}, {"max", st.max}};
      gj["success_rate"] = judged ? Json(static_cast<double>(successes) / judged) : Json(nullptr);
      gj["mean_rounds"] = {{"observe", rounds[0] / cnt}, {"stage1", rounds[1] / cnt}, {"stage2", rounds[2] / cnt},
                           {"stage3", rounds[3] / cnt}, {"exploration", exploration / cnt}};
      Json curve = {{"mean", Json::array()}, {"min", Json::array()}, {"max", Json::array()}};
      for (std::size_t k = 0; k < grid.size() && !curves.empty(); ++k) {
        std::vector<double> col;
        for (const auto& c : curves) col.push_back(c[k]);
        const auto cs = detail::stats(col);
        curve["mean"].push_back(cs.mean);
        curve["min"].push_back(cs.min);
        curve["max"].push_back(cs.max);
      }
      gj["curve"] = std::move(curve);
      summary["groups"].push_back(std::move(gj));
    }
  }
  summary["runs"] = std::move(runs);
  summary["errors"] = result.errors;
  write_file((out / "summary.json").string(), summary.dump(2) + "\n");
  write_file((out / "errors.json").string(), manifest.dump(2) + "\n");
  result.summary = std::move(summary);
  return result;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Prints the assumption report for an instance file. Returns 0 iff both
/// checks pass; ParseError propagates for malformed files.
inline int validate_command(const std::string& path, const AssumptionMargins& margins, std::ostream& os) {
  const CausalInstance inst = load_instance(path);
  const AssumptionReport rep = validate_assumptions(inst, margins);
  const auto& d = inst.dag();
  os << path << ": " << inst.size() << " nodes, " << d.edge_count() << " edges, reward node "
     << d.name(inst.reward().node) << "\n";
  os << "  assumption 2 (every edge has an effect > " << margins.epsilon_margin << "): "
     << (rep.assumption2 ? "pass" : "FAIL");
  if (rep.violating_edge)
    os << "  [edge " << d.name(rep.violating_edge->first) << " -> " << d.name(rep.violating_edge->second) << "]";
  os << "  weakest effect " << rep.weakest_edge_effect << "\n";
  os << "  assumption 3 (every ancestor of the reward node has a gap >= " << margins.delta_gap << "): "
     << (rep.assumption3 ? "pass" : "FAIL");
  if (rep.violating_ancestor) os << "  [node " << d.name(*rep.violating_ancestor) << "]";
  os << "  smallest gap " << rep.smallest_reward_gap << "\n";
  return rep.passed() ? 0 : 1;
}

/// The regret-separation matrix: binary trees of 7, 15 and 31 nodes,
/// CN-UCB against full-action UCB.
inline ExperimentSpec bench_spec(std::uint64_t master_seed = 0) {
  ExperimentSpec s;
  for (int n : {7, 15, 31}) {
    GeneratorEntry e;
    e.spec.family = "binary_tree";
    e.spec.n = n;
    e.spec.K = 2;
    e.id = default_generator_id(e.spec);
    s.generators.push_back(e);
  }
  s.algorithms = {"cn-ucb-tree", "ucb-full"};
  s.horizon = 50000;
  for (int i = 0; i < 50; ++i) s.seeds.push_back(i);
  s.master_seed = master_seed;
  s.csv_stride = 100;
  s.out_dir = "bench_out";
  return s;
}

/// Mean final regret of one (generator, algorithm) group in a summary.
inline std::optional<double> group_mean_regret(const Json& summary, const std::string& gen, const std::string& algo) {
  for (const auto& g : summary.at("groups"))
    if (g.at("generator") == gen && g.at("algorithm") == algo) return g.at("final_regret").at("mean").get<double>();
  return std::nullopt;
}

}  // namespace cbandit
