#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fogperc/config.hpp"
#include "fogperc/cpufreq.hpp"
#include "fogperc/env.hpp"
#include "fogperc/marl.hpp"

namespace fogperc {

inline constexpr int kMetricsSchemaVersion = 1;

using Policy = std::function<std::vector<Decision>(const Environment&)>;

/// Serving node of the distance rule: the nearest covering F-AP if it is at
/// least as close as the nearest RRH, otherwise the cloud.
int distance_mode(const World& world, int k);

/// Distance-based mode selection with every sensed block uploaded.
std::vector<Decision> distance_full_decisions(const Environment& env);

/// Uniform mode, each sensed block uploaded with probability 1/2.
std::vector<Decision> random_decisions(const Environment& env, Rng& rng);

/// Appends per-step and per-VUE rows to steps.csv and vues.csv in `dir`.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& dir, std::string run_id);

  void record(int episode, const StepResult& step);
  long rows() const { return rows_; }

 private:
  std::string run_id_;
  std::ofstream steps_;
  std::ofstream vues_;
  long rows_ = 0;
};

/// Aggregates of one policy over a set of episodes.
struct RunSummary {
  std::string policy;
  int episodes = 0;
  int steps = 0;
  std::vector<double> episode_sum_satisfaction;
  double mean_sum_satisfaction = 0.0;
  double mean_latency_ms = 0.0;  ///< mean over VUE-steps of tau_k
  int latency_violations = 0;
  int other_violations = 0;      ///< block, mode, RB and budget constraints
  double violation_rate = 0.0;
  long matching_iterations = 0;

  nlohmann::json to_json() const;
};

/// Runs `policy` on the worlds seeded by `episode_seeds`; `on_step` sees
/// every step result.
RunSummary run_policy(const ExperimentConfig& cfg, const std::string& name, const Policy& policy,
                      SwapCriterion criterion, const std::vector<std::uint64_t>& episode_seeds,
                      MetricsWriter* writer = nullptr);

/// Seeds of the evaluation episodes (disjoint from training episodes).
std::vector<std::uint64_t> evaluation_seeds(std::uint64_t root, int count);
/// Seeds of training episodes [first, first + count).
std::vector<std::uint64_t> training_seeds(std::uint64_t root, int first, int count);

RunSummary run_baseline_distance_full(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                      MetricsWriter* writer = nullptr);
RunSummary run_baseline_maxsumrate(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                   MetricsWriter* writer = nullptr);
RunSummary run_random_policy(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                             MetricsWriter* writer = nullptr);
/// Greedy rollouts of trained actors.
RunSummary run_trained_policy(const Trainer& trainer, const std::vector<std::uint64_t>& seeds,
                              MetricsWriter* writer = nullptr);

/// Trains the proposed scheme, writing per-step metrics of every training
/// episode to `writer` when given.
void run_proposed(Trainer& trainer, MetricsWriter* writer = nullptr,
                  const std::function<void(const EpisodeLog&)>& on_episode = {});

/// Random single-cluster matching instance with its own world and channels.
struct MatchingInstance {
  World world;
  ChannelState channels;
  RateModel model;
  ClusterProblem problem;

  MatchingInstance(const ExperimentConfig& base, int vues, int rbs, std::uint64_t seed);
  MatchingInstance(const MatchingInstance&) = delete;
  MatchingInstance& operator=(const MatchingInstance&) = delete;
};

/// Random frequency instance: loads, budget and (possibly binding) caps.
FreqProblem random_freq_problem(int vues, Rng& rng);

struct MatchingOracleRow {
  int size = 0;
  int swaps = 0;
  double proposed = 0.0;
  double optimal = 0.0;
};

struct FreqOracleRow {
  int vues = 0;
  double kkt_objective = 0.0;
  double grid_objective = 0.0;
  double neighbor_objective = 0.0;  ///< objective at the KKT point's nearest feasible grid neighbour
  double budget_excess = 0.0;  ///< max(0, sum f - budget) / budget
  double cap_excess = 0.0;     ///< largest relative cap overshoot
  double stationarity = 0.0;
};

struct OracleReport {
  std::vector<MatchingOracleRow> swap_rows;     ///< K = S in {4, 6, 8}
  std::vector<MatchingOracleRow> optimal_rows;  ///< K = S <= max_size
  std::vector<FreqOracleRow> freq_rows;
  double freq_resolution = 0.0;

  int max_swaps() const;
  double median_swaps() const;
  double within_10pct_fraction() const;
  bool never_below_optimum() const;
  bool freq_objective_ok() const;
  bool freq_feasible_ok() const;
  bool freq_stationary_ok() const;

  nlohmann::json to_json() const;
};

/// Exhaustive RB search and frequency grid search against the fast paths.
OracleReport run_oracles(const ExperimentConfig& cfg);

/// One aggregated sweep cell.
struct SweepCell {
  int vues = 0;
  double d_exp = 0.0;
  std::vector<RunSummary> runs;  ///< one per seed
};

/// Cartesian product of the sweep axes times seeds.
std::vector<SweepCell> sweep(const ExperimentConfig& cfg);
void write_sweep_tables(const std::filesystem::path& dir, const std::vector<SweepCell>& cells);

/// Full resolved config plus build information.
nlohmann::json run_manifest(const ExperimentConfig& cfg, const std::string& command);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

double mean(const std::vector<double>& v);
/// Population standard deviation.
double stddev(const std::vector<double>& v);

}  // namespace fogperc
