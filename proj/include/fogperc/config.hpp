#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace fogperc {

/// How the per-block temporal value chain is initialised at episode start.
enum class InitialValue { kUniform, kTop };

/// Road, vehicles, infrastructure and task parameters. Units: meters,
/// seconds, bits, cycles, watts, Hz.
struct ScenarioConfig {
  double road_length = 1000.0;
  int num_blocks = 100;
  int num_vues = 6;
  int num_faps = 1;
  int num_rrhs = 2;
  double d_exp = 300.0;           ///< forward perception length per VUE
  double block_bits = 6400.0;     ///< I
  double cycles_per_bit = 130.0;  ///< mu
  double tau_max_min = 0.100;
  double tau_max_max = 0.150;
  double tau_dll = 1.0;           ///< temporal value deadline
  int value_levels = 5;           ///< Z
  int steps_per_episode = 25;     ///< T
  double dt = 0.1;
  double speed_min = 15.0;
  double speed_max = 25.0;
  bool bidirectional = false;
  double sensing_radius = 50.0;
  double tx_power = 0.2;
  double fap_y = 20.0;
  double fap_coverage = 300.0;
  double fap_f_max = 10e9;
  double rrh_y = 30.0;
  double cloud_f_max = 30e9;
  // Birth-death temporal value chain with regeneration to the top level.
  double p_down = 0.15;
  double p_up = 0.05;
  double p_regen = 0.10;
  InitialValue initial_value = InitialValue::kUniform;

  void validate() const;
};

struct RadioConfig {
  int num_rbs = 0;                 ///< S; 0 derives it from total_bandwidth / rb_bandwidth
  double total_bandwidth = 15e6;
  double rb_bandwidth = 1e6;       ///< W
  double noise_power = 3.98e-14;   ///< sigma^2 per RB, -104 dBm
  double fronthaul_delay = 0.002;  ///< tau_fh
  double pathloss_exponent = 3.0;
  double pathloss_ref_db = 35.0;   ///< loss at 1 m
  int rrh_cluster_size = 2;        ///< |M_k|
  double fading_variance = 1.0;    ///< 0 gives deterministic pure-pathloss channels

  int rb_count() const;
  void validate(int num_rrhs) const;
};

struct SatisfactionWeights {
  double eps1 = 1.0;
  double eps2 = 50.0;  ///< 1/s

  void validate() const;
};

enum class ProposalRule {
  kHoldFirst,  ///< an RB that already holds a VUE rejects every later proposal
  kDisplace,   ///< classic deferred acceptance: an RB trades up to a preferred proposer
};

struct MatchingConfig {
  ProposalRule rule = ProposalRule::kHoldFirst;
  int exhaustive_cap = 8;
  int max_swaps = 500;
  bool debug_trace = false;
};

enum class TargetPolicy { kTargetActors, kStoredNextActions };

struct TrainingConfig {
  int episodes = 200;
  double gamma = 0.95;
  int buffer_capacity = 100000;
  int batch_size = 256;
  double soft_update = 0.01;
  double lr_critic = 1e-3;
  double lr_actor = 1e-4;
  int actor_hidden = 64;
  int critic_hidden = 64;
  int embed_dim = 32;
  int attention_dim = 16;
  double noise_start = 0.5;
  double noise_end = 0.05;
  double penalty = -1.0;      ///< per violating VUE per step; negative means eps2 * tau_max_k
  double action_reg = 1e-3;   ///< L2 weight on the actor's pre-tanh outputs
  double noise_correlation = 0.0;  ///< correlation of exploration noise across one agent's block logits
  double reward_scale = 1.0;  ///< rewards are multiplied by this before storage
  int warmup = 0;             ///< minimum buffer size before updates; 0 means batch_size
  int update_every = 1;       ///< env steps between update rounds
  bool shared_embedding = true;
  TargetPolicy target_policy = TargetPolicy::kTargetActors;

  void validate() const;
};

struct SweepConfig {
  std::vector<int> vues = {6, 12};
  std::vector<double> d_exp = {150.0, 300.0, 500.0};
  int seeds = 3;
  std::string policy = "distance-full";  ///< distance-full | max-sum-rate | random | proposed
  int episodes = 1;                      ///< evaluation episodes per cell

  void validate() const;
};

struct OracleConfig {
  int instances = 200;
  int max_size = 6;
  int freq_instances = 100;
  double freq_resolution = 1e-3;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  RadioConfig radio;
  SatisfactionWeights weights;
  MatchingConfig matching;
  TrainingConfig training;
  SweepConfig sweep;
  OracleConfig oracle;
  std::uint64_t seed = 1;
  std::string run_id = "run";
  std::string baseline = "distance-full";
  int eval_episodes = 5;

  void validate() const;
};

/// Parses INI-style text: `[section]` headers, `key = value` lines, `#` or
/// `;` comments. Unknown sections or keys are rejected with a ConfigError
/// naming the field.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& cfg);

}  // namespace fogperc
