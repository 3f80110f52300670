#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbandit/cbandit.hpp"

using namespace cbandit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("cbandit_harness_" + name);
  fs::remove_all(p);
  return p;
}

GeneratorEntry entry(const std::string& fam, int n) {
  GeneratorEntry e;
  e.spec.family = fam;
  e.spec.n = n;
  e.id = default_generator_id(e.spec);
  return e;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

double last_cum_regret(const fs::path& csv) {
  const auto ls = lines_of(csv);
  return std::stod(ls.back().substr(ls.back().rfind(',') + 1));
}

ExperimentSpec small_spec(const fs::path& out) {
  ExperimentSpec s;
  s.generators = {entry("figure1", 9), entry("tree", 6)};
  s.algorithms = {"cn-ucb-tree", "ucb-full"};
  s.seeds = {0, 1, 2};
  s.horizon = 3000;
  s.B = 40;
  s.curve_points = 10;
  s.out_dir = out.string();
  return s;
}

}  // namespace

TEST(Harness, SmallestRun) {
  const auto out = scratch("smallest");
  ExperimentSpec s;
  s.generators = {entry("figure1", 9)};
  s.algorithms = {"cn-ucb-tree"};
  s.seeds = {0};
  s.horizon = 200;
  s.out_dir = out.string();
  const auto res = run_experiment(s);
  EXPECT_EQ(res.errors, 0);
  const auto csvs = std::distance(fs::directory_iterator(out / "runs"), fs::directory_iterator{});
  EXPECT_EQ(csvs, 1);
  const auto ls = lines_of(out / "runs" / "figure1__cn-ucb-tree__seed0.csv");
  ASSERT_EQ(ls.size(), 201u);
  EXPECT_EQ(ls[0], "run_id,t,stage,action_node,action_value,reward,mu,cum_regret");
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_TRUE(fs::exists(out / "instances" / "figure1__seed0.json"));
  EXPECT_TRUE(fs::exists(out / "instances" / "figure1__seed0.truth.json"));
  EXPECT_EQ(lines_of(out / "errors.json"), (std::vector<std::string>{"[]"}));
  fs::remove_all(out);
}

TEST(Harness, RerunIsByteIdentical) {
  const auto out = scratch("rerun");
  const auto s = small_spec(out);
  run_experiment(s);
  const std::string first = read_file((out / "summary.json").string());
  const std::string csv = read_file((out / "runs" / "tree_n6__ucb-full__seed2.csv").string());
  run_experiment(s);
  EXPECT_EQ(read_file((out / "summary.json").string()), first);
  EXPECT_EQ(read_file((out / "runs" / "tree_n6__ucb-full__seed2.csv").string()), csv);
  fs::remove_all(out);
}

TEST(Harness, ParallelMatchesSerial) {
  const auto a = scratch("serial"), b = scratch("parallel");
  auto s = small_spec(a);
  run_experiment(s);
  s.out_dir = b.string();
  s.jobs = 4;
  run_experiment(s);
  EXPECT_EQ(read_file((a / "summary.json").string()), read_file((b / "summary.json").string()));
  for (const auto& f : fs::directory_iterator(a / "runs"))
    EXPECT_EQ(read_file(f.path().string()), read_file((b / "runs" / f.path().filename()).string())) << f.path();
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Harness, SummaryAgreesWithCsv) {
  const auto out = scratch("summary");
  auto s = small_spec(out);
  s.csv_stride = 7;
  const auto res = run_experiment(s);
  const Json j = Json::parse(read_file((out / "summary.json").string()));
  for (const auto& g : s.generators)
    for (const auto& a : s.algorithms) {
      double sum = 0;
      for (int seed : s.seeds) sum += last_cum_regret(out / ("runs/" + g.id + "__" + a + "__seed" + std::to_string(seed) + ".csv"));
      const auto mean = group_mean_regret(j, g.id, a);
      ASSERT_TRUE(mean);
      EXPECT_NEAR(*mean, sum / 3, 1e-9 * (1 + sum));
    }
  EXPECT_EQ(j.at("curve_t").back().get<std::int64_t>(), 3000);
  EXPECT_EQ(j.at("curve_t").size(), 10u);
  for (const auto& g : j.at("groups")) {
    EXPECT_EQ(g.at("curve").at("mean").size(), 10u);
    EXPECT_NEAR(g.at("curve").at("mean").back().get<double>(), g.at("final_regret").at("mean").get<double>(), 1e-9);
  }
  // strided CSV: header, t = 7, 14, ..., 2996, then t = 3000
  EXPECT_EQ(lines_of(out / "runs" / "figure1__ucb-full__seed0.csv").size(), 1u + 428u + 1u);
  fs::remove_all(out);
}

TEST(Harness, ErrorManifest) {
  const auto out = scratch("errors");
  ExperimentSpec s;
  s.generators = {entry("chordal", 8), entry("tree", 5)};
  s.algorithms = {"cn-ucb-tree"};
  s.seeds = {0, 1};
  s.horizon = 100;
  s.out_dir = out.string();
  const auto res = run_experiment(s);
  EXPECT_EQ(res.errors, 2);
  const Json m = Json::parse(read_file((out / "errors.json").string()));
  ASSERT_EQ(m.size(), 2u);
  for (const auto& e : m) {
    EXPECT_EQ(e.at("generator"), "chordal_n8");
    EXPECT_EQ(e.at("error_type"), "NotATree");
  }
  EXPECT_TRUE(fs::exists(out / "runs" / "tree_n5__cn-ucb-tree__seed1.csv"));
  fs::remove_all(out);
}

TEST(Harness, SpecJson) {
  const Json j = Json::parse(R"({"generators": [{"family": "tree", "n": 11, "max_degree": 3}],
    "algorithms": ["cn-ucb-tree"], "seeds": 4, "horizon": 500, "eps_margin": 0.25, "jobs": 2})");
  const auto s = spec_from_json(j);
  ASSERT_EQ(s.generators.size(), 1u);
  EXPECT_EQ(s.generators[0].id, "tree_n11");
  EXPECT_EQ(s.generators[0].spec.max_degree, 3);
  EXPECT_DOUBLE_EQ(s.generators[0].spec.margins.epsilon_margin, 0.25);
  EXPECT_EQ(s.seeds, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(s.jobs, 2);
  const auto again = spec_from_json(spec_to_json(s));
  EXPECT_EQ(spec_to_json(again), spec_to_json(s));

  auto bad = s;
  bad.algorithms = {"egreedy"};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = s;
  bad.generators.push_back(bad.generators[0]);
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(spec_from_json(Json::parse(R"({"horizon": "long"})")), ConfigError);
}

TEST(Harness, Seeds) {
  EXPECT_NE(instance_seed(0, "tree_n5", 0), instance_seed(0, "tree_n5", 1));
  EXPECT_NE(instance_seed(0, "tree_n5", 0), instance_seed(0, "tree_n6", 0));
  EXPECT_NE(instance_seed(0, "tree_n5", 0), instance_seed(1, "tree_n5", 0));
  EXPECT_NE(run_seed(0, "tree_n5", "ucb-full", 0), run_seed(0, "tree_n5", "cn-ucb-tree", 0));
  EXPECT_EQ(run_seed(3, "g", "a", 2), run_seed(3, "g", "a", 2));
}

TEST(Harness, ValidateCommand) {
  const auto dir = scratch("validate");
  fs::create_directories(dir);
  const auto bad = (dir / "lb.json").string(), good = (dir / "fig.json").string();
  write_file(bad, instance_to_string(generate_lower_bound_thm4(5, 2, 10000, 3)));
  write_file(good, instance_to_string(generate_figure1_instance(2, {0.3, 0.3}).instance));
  std::ostringstream os;
  EXPECT_EQ(validate_command(bad, {0.3, 0.3}, os), 1);
  EXPECT_NE(os.str().find("assumption 2"), std::string::npos);
  EXPECT_NE(os.str().find("FAIL  [edge"), std::string::npos);
  std::ostringstream ok;
  EXPECT_EQ(validate_command(good, {0.3, 0.3}, ok), 0);
  EXPECT_EQ(ok.str().find("FAIL"), std::string::npos);
  write_file(bad, "{\"nodes\": [");
  EXPECT_THROW(validate_command(bad, {0.3, 0.3}, os), ParseError);
  fs::remove_all(dir);
}

TEST(Harness, BenchSpec) {
  const auto s = bench_spec();
  EXPECT_NO_THROW(s.validate());
  EXPECT_EQ(s.generators.size(), 3u);
  EXPECT_EQ(s.seeds.size(), 50u);
  EXPECT_EQ(s.horizon, 50000);
}
