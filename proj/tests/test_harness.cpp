#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fogperc/harness.hpp"

using namespace fogperc;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small(int vues = 3) {
  ExperimentConfig cfg;
  cfg.scenario.num_vues = vues;
  cfg.scenario.steps_per_episode = 4;
  cfg.scenario.sensing_radius = 100.0;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long line_count(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<long>(std::count(s.begin(), s.end(), '\n'));
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fogperc_test_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Stats, MeanAndPopulationStd) {
  EXPECT_DOUBLE_EQ(mean({1.0, 3.0}), 2.0);
  EXPECT_DOUBLE_EQ(stddev({1.0, 3.0}), 1.0);
  EXPECT_DOUBLE_EQ(stddev({5.0}), 0.0);
}

TEST(Seeds, EvaluationAndTrainingAreDisjoint) {
  const auto eval = evaluation_seeds(7, 50);
  const auto train = training_seeds(7, 0, 50);
  for (auto s : eval) EXPECT_EQ(std::count(train.begin(), train.end(), s), 0);
  EXPECT_EQ(training_seeds(7, 3, 1).front(), episode_seed(7, 3));
  EXPECT_EQ(evaluation_seeds(7, 3), evaluation_seeds(7, 3));
}

TEST(DistanceMode, FogWhenCloserThanRrhCloudOtherwise) {
  const auto cfg = small(1);
  World w(cfg.scenario, 1);
  const auto fap = w.faps()[0];
  w.mutable_vues()[0].position = fap.position;
  EXPECT_EQ(distance_mode(w, 0), fap.id);
  w.mutable_vues()[0].position = w.rrhs()[0].position;
  EXPECT_EQ(distance_mode(w, 0), 0);
  w.mutable_vues()[0].position = {fap.position.x + fap.coverage_radius + 1.0, fap.position.y};
  EXPECT_EQ(distance_mode(w, 0), 0);
}

TEST(DistanceMode, MatchesRuleOnRandomWorlds) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto cfg = small(6);
    World w(cfg.scenario, seed);
    for (int k = 0; k < 6; ++k) {
      const Vec2 p = w.vue(k).position;
      const auto& fap = w.faps()[0];
      double rrh = 1e300;
      for (const auto& r : w.rrhs()) rrh = std::min(rrh, distance(p, r.position));
      const double d = distance(p, fap.position);
      const int expected = d <= fap.coverage_radius && d <= rrh ? fap.id : 0;
      EXPECT_EQ(distance_mode(w, k), expected);
    }
  }
}

TEST(Baselines, DistanceFullUploadsEverySensedBlock) {
  const auto cfg = small(4);
  Environment env(cfg, 3);
  const auto d = distance_full_decisions(env);
  ASSERT_EQ(d.size(), 4u);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(d[k].blocks, env.world().sensed_blocks(k));
    EXPECT_EQ(d[k].node, distance_mode(env.world(), k));
  }
}

TEST(Baselines, RandomDecisionsAreValid) {
  const auto cfg = small(4);
  Environment env(cfg, 3);
  Rng rng(1);
  int uploaded = 0, sensed = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto d = random_decisions(env, rng);
    for (int k = 0; k < 4; ++k) {
      const auto s = env.world().sensed_blocks(k);
      EXPECT_TRUE(std::includes(s.begin(), s.end(), d[k].blocks.begin(), d[k].blocks.end()));
      EXPECT_GE(d[k].node, 0);
      EXPECT_LT(d[k].node, env.world().num_nodes());
      uploaded += static_cast<int>(d[k].blocks.size());
      sensed += static_cast<int>(s.size());
    }
  }
  EXPECT_NEAR(static_cast<double>(uploaded) / sensed, 0.5, 0.03);
}

TEST(RunPolicy, SummaryAggregates) {
  const auto cfg = small(3);
  const auto seeds = evaluation_seeds(cfg.seed, 3);
  const auto s = run_baseline_distance_full(cfg, seeds);
  EXPECT_EQ(s.policy, "distance-full");
  EXPECT_EQ(s.episodes, 3);
  EXPECT_EQ(s.steps, 12);
  ASSERT_EQ(s.episode_sum_satisfaction.size(), 3u);
  EXPECT_NEAR(s.mean_sum_satisfaction, mean(s.episode_sum_satisfaction), 1e-9);
  EXPECT_EQ(s.other_violations, 0);
  EXPECT_NEAR(s.violation_rate, s.latency_violations / 36.0, 1e-12);
  EXPECT_GT(s.mean_latency_ms, 0.0);
  const auto j = s.to_json();
  EXPECT_EQ(j["episodes"], 3);
}

TEST(RunPolicy, SingleVue) {
  const auto cfg = small(1);
  const auto seeds = evaluation_seeds(cfg.seed, 2);
  for (const auto& s : {run_baseline_distance_full(cfg, seeds), run_baseline_maxsumrate(cfg, seeds),
                        run_random_policy(cfg, seeds)}) {
    EXPECT_EQ(s.steps, 8);
    EXPECT_TRUE(std::isfinite(s.mean_sum_satisfaction));
  }
}

TEST(Metrics, ByteIdenticalAcrossRuns) {
  const auto cfg = small(3);
  const auto seeds = evaluation_seeds(cfg.seed, 2);
  const fs::path a = scratch("metrics_a"), b = scratch("metrics_b");
  {
    MetricsWriter wa(a, "r"), wb(b, "r");
    run_baseline_distance_full(cfg, seeds, &wa);
    run_baseline_distance_full(cfg, seeds, &wb);
    EXPECT_EQ(wa.rows(), 8);
  }
  EXPECT_EQ(slurp(a / "steps.csv"), slurp(b / "steps.csv"));
  EXPECT_EQ(slurp(a / "vues.csv"), slurp(b / "vues.csv"));
  EXPECT_EQ(line_count(a / "steps.csv"), 1 + 8);
  EXPECT_EQ(line_count(a / "vues.csv"), 1 + 8 * 3);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Metrics, TrainingRunsAreReproducible) {
  auto cfg = small(2);
  cfg.training.episodes = 2;
  cfg.training.batch_size = 4;
  cfg.training.actor_hidden = cfg.training.critic_hidden = 8;
  const fs::path a = scratch("train_a"), b = scratch("train_b");
  for (const auto& dir : {a, b}) {
    Trainer t(cfg);
    MetricsWriter w(dir, "t");
    run_proposed(t, &w);
    write_learning_curve(dir / "curve.csv", t.history());
  }
  EXPECT_EQ(slurp(a / "steps.csv"), slurp(b / "steps.csv"));
  EXPECT_EQ(slurp(a / "curve.csv"), slurp(b / "curve.csv"));
  EXPECT_EQ(line_count(a / "curve.csv"), 3);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Sweep, GridAndTables) {
  auto cfg = small(2);
  cfg.sweep.vues = {2, 3};
  cfg.sweep.d_exp = {150.0, 300.0};
  cfg.sweep.seeds = 3;
  const auto cells = sweep(cfg);
  ASSERT_EQ(cells.size(), 4u);
  for (const auto& c : cells) {
    ASSERT_EQ(c.runs.size(), 3u);
    for (const auto& r : c.runs) EXPECT_EQ(r.steps, 4);
  }
  EXPECT_EQ(cells[3].vues, 3);
  EXPECT_EQ(cells[3].d_exp, 300.0);
  EXPECT_EQ(sweep(cfg)[1].runs[2].mean_sum_satisfaction, cells[1].runs[2].mean_sum_satisfaction);

  const fs::path dir = scratch("sweep");
  write_sweep_tables(dir, cells);
  EXPECT_EQ(line_count(dir / "sweep.csv"), 1 + 4);
  EXPECT_EQ(line_count(dir / "sweep_long.csv"), 1 + 4 * 3 * 3);
  std::ifstream in(dir / "sweep.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::vector<std::string> fields;
  std::stringstream ss(row);
  for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
  std::vector<double> sat;
  for (const auto& r : cells[0].runs) sat.push_back(r.mean_sum_satisfaction);
  EXPECT_NEAR(std::stod(fields[5]), stddev(sat), 1e-6 * (1 + stddev(sat)));
  fs::remove_all(dir);
}

TEST(Oracles, SmallReportPasses) {
  auto cfg = small(2);
  cfg.oracle.instances = 12;
  cfg.oracle.max_size = 4;
  cfg.oracle.freq_instances = 10;
  cfg.oracle.freq_resolution = 1e-2;
  const auto report = run_oracles(cfg);
  EXPECT_EQ(report.swap_rows.size(), 12u);
  EXPECT_EQ(report.optimal_rows.size(), 12u);
  EXPECT_EQ(report.freq_rows.size(), 10u);
  EXPECT_TRUE(report.never_below_optimum());
  EXPECT_TRUE(report.freq_feasible_ok());
  EXPECT_TRUE(report.freq_objective_ok());
  EXPECT_LE(report.max_swaps(), 10);
  const auto j = report.to_json();
  EXPECT_TRUE(j["frequency"]["verdict"].get<bool>());
}

TEST(Manifest, CarriesSeedAndConfig) {
  auto cfg = small(2);
  cfg.seed = 99;
  const auto m = run_manifest(cfg, "baseline");
  EXPECT_EQ(m["seed"], 99);
  EXPECT_EQ(m["command"], "baseline");
  EXPECT_EQ(m["config"]["scenario"]["num_vues"], 2);
  EXPECT_TRUE(m["versions"].contains("eigen"));
}
