#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbandit/cbandit.hpp"

namespace {

using namespace cbandit;

std::uint64_t env_master_seed() {
  const char* s = std::getenv("CBANDIT_SEED");
  if (!s || !*s) return 0;
  try {
    return std::stoull(s, nullptr, 0);
  } catch (const std::exception&) {
    throw ConfigError(std::string("CBANDIT_SEED is not an integer: ") + s);
  }
}

struct GenFlags {
  std::string family = "tree";
  int n = 7, K = 2, max_degree = 0, components = 3, max_clique = 3, index = 0;
  bool proper_interval = false;

  void add(CLI::App* app) {
    app->add_option("--family", family, "tree | binary_tree | forest | chordal | lower_bound_thm4 | lower_bound_thm5 | figure1");
    app->add_option("--n", n, "number of nodes")->check(CLI::PositiveNumber);
    app->add_option("--k", K, "number of intervention values per node")->check(CLI::PositiveNumber);
    app->add_option("--max-degree", max_degree, "skeleton degree cap for trees (0 = none)");
    app->add_option("--components", components, "forest component count");
    app->add_option("--max-clique", max_clique, "chordal clique-size cap");
    app->add_flag("--proper-interval", proper_interval, "chordal: proper interval graphs only");
    app->add_option("--index", index, "lower-bound instance index (0 = base instance)");
  }

  GeneratorSpec spec(const AssumptionMargins& m, std::int64_t T) const {
    GeneratorSpec g;
    g.family = family;
    g.n = n;
    g.K = K;
    g.max_degree = max_degree;
    g.components = components;
    g.max_clique = max_clique;
    g.proper_interval = proper_interval;
    g.index = index;
    g.margins = m;
    g.T = T;
    return g;
  }
};

void print_groups(const Json& summary) {
  std::printf("%-28s %-16s %5s %14s %12s %9s %12s\n", "generator", "algorithm", "runs", "mean_regret", "stddev",
              "success", "exploration");
  for (const auto& g : summary.at("groups")) {
    const auto& fr = g.at("final_regret");
    const std::string succ =
        g.at("success_rate").is_null() ? "-" : std::to_string(g.at("success_rate").get<double>()).substr(0, 5);
    std::printf("%-28s %-16s %5d %14.3f %12.3f %9s %12.1f\n", g.at("generator").get<std::string>().c_str(),
                g.at("algorithm").get<std::string>().c_str(), g.at("runs").get<int>(), fr.at("mean").get<double>(),
                fr.at("stddev").get<double>(), succ.c_str(), g.at("mean_rounds").at("exploration").get<double>());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal bandits with an unknown graph"};
  app.require_subcommand(1);

  AssumptionMargins margins{0.3, 0.3};
  double delta = 0.1;
  std::int64_t horizon = 10000;
  int seeds = 1, jobs = 1;
  std::string out;
  std::string spec_file;
  std::vector<std::string> algos;
  GenFlags gen;

  auto add_margins = [&](CLI::App* sub) {
    sub->add_option("--eps-margin", margins.epsilon_margin, "edge-effect margin epsilon");
    sub->add_option("--delta-gap", margins.delta_gap, "reward-gap margin Delta");
  };

  auto* gen_cmd = app.add_subcommand("gen", "generate instances (JSON plus ground-truth sidecar)");
  gen.add(gen_cmd);
  add_margins(gen_cmd);
  gen_cmd->add_option("--seeds", seeds, "number of instances")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--horizon", horizon, "horizon T (sets the lower-bound gap)");
  gen_cmd->add_option("--out", out, "output directory, or - for the first instance on stdout")->required();

  auto* run_cmd = app.add_subcommand("run", "run an experiment");
  gen.add(run_cmd);
  add_margins(run_cmd);
  run_cmd->add_option("--spec", spec_file, "JSON experiment spec; other flags override it");
  run_cmd->add_option("--algo", algos, "cn-ucb-tree | cn-ucb-forest | cn-ucb-general | ucb-full")->delimiter(',');
  run_cmd->add_option("--horizon", horizon, "horizon T");
  run_cmd->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  run_cmd->add_option("--delta", delta, "confidence parameter");
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string instance_path;
  auto* val_cmd = app.add_subcommand("validate", "check the identifiability assumptions of an instance file");
  val_cmd->add_option("instance", instance_path, "instance JSON")->required();
  add_margins(val_cmd);

  auto* bench_cmd = app.add_subcommand("bench", "the regret-separation matrix (binary trees, CN-UCB vs UCB)");
  bench_cmd->add_option("--horizon", horizon, "horizon T");
  bench_cmd->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--delta", delta, "confidence parameter");
  add_margins(bench_cmd);
  bench_cmd->add_option("--out", out, "output directory");
  bench_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    std::uint64_t master = env_master_seed();

    if (*gen_cmd) {
      const GeneratorSpec base = gen.spec(margins, horizon);
      const std::string id = default_generator_id(base);
      if (out != "-") std::filesystem::create_directories(out);
      for (int i = 0; i < seeds; ++i) {
        GeneratorSpec g = base;
        g.seed = instance_seed(master, id, i);
        const GeneratedInstance gi = generate(g);
        if (out == "-") {
          std::cout << instance_to_string(gi.instance);
          break;
        }
        const std::string stem = (std::filesystem::path(out) / (id + "__seed" + std::to_string(i))).string();
        write_file(stem + ".json", instance_to_string(gi.instance));
        write_file(stem + ".truth.json", ground_truth_to_json(gi.truth).dump(2) + "\n");
        std::cout << stem << ".json\n";
      }
      return 0;
    }

    if (*val_cmd) return validate_command(instance_path, margins, std::cout);

    ExperimentSpec spec;
    if (*bench_cmd) {
      spec = bench_spec(master);
    } else if (!spec_file.empty()) {
      spec = spec_from_json(detail::parse_json_text(read_file(spec_file)));
      if (!std::getenv("CBANDIT_SEED")) master = spec.master_seed;
    }
    // Explicit flags override the spec file or bench defaults.
    CLI::App* sub = *bench_cmd ? bench_cmd : run_cmd;
    auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (std::getenv("CBANDIT_SEED")) spec.master_seed = master;
    if (given("--horizon")) spec.horizon = horizon;
    if (given("--seeds")) {
      spec.seeds.clear();
      for (int i = 0; i < seeds; ++i) spec.seeds.push_back(i);
    }
    if (given("--delta")) spec.delta = delta;
    if (given("--eps-margin")) spec.margins.epsilon_margin = margins.epsilon_margin;
    if (given("--delta-gap")) spec.margins.delta_gap = margins.delta_gap;
    if (given("--out")) spec.out_dir = out;
    if (given("--jobs")) spec.jobs = jobs;
    if (*run_cmd) {
      if (!algos.empty()) spec.algorithms = algos;
      if (spec_file.empty() || run_cmd->count("--family")) {
        GeneratorEntry e;
        e.spec = gen.spec(spec.margins, spec.horizon);
        e.id = default_generator_id(e.spec);
        spec.generators = {e};
      }
      if (spec.seeds.empty()) spec.seeds = {0};
      if (spec.algorithms.empty()) spec.algorithms = {"cn-ucb-tree"};
      if (spec_file.empty() && !given("--out")) spec.out_dir = "out";
    }
    for (auto& g : spec.generators) {
      if (given("--eps-margin")) g.spec.margins.epsilon_margin = spec.margins.epsilon_margin;
      if (given("--delta-gap")) g.spec.margins.delta_gap = spec.margins.delta_gap;
      if (given("--horizon")) g.spec.T = spec.horizon;
    }

    const ExperimentResult res = run_experiment(spec);
    print_groups(res.summary);
    if (*bench_cmd) {
      std::printf("\n%-8s %14s %14s %10s\n", "n", "cn-ucb-tree", "ucb-full", "ratio");
      for (const auto& g : spec.generators) {
        const auto cn = group_mean_regret(res.summary, g.id, "cn-ucb-tree");
        const auto ucb = group_mean_regret(res.summary, g.id, "ucb-full");
        if (cn && ucb) std::printf("%-8d %14.3f %14.3f %10.3f\n", g.spec.n, *cn, *ucb, *ucb / *cn);
      }
    }
    std::printf("summary: %s\n", (std::filesystem::path(spec.out_dir) / "summary.json").string().c_str());
    if (res.errors) {
      std::fprintf(stderr, "%d run(s) failed; see %s\n", res.errors,
                   (std::filesystem::path(spec.out_dir) / "errors.json").string().c_str());
      return 1;
    }
    return 0;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
