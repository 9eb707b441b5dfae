#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fogperc/alloc.hpp"
#include "fogperc/config.hpp"
#include "fogperc/matching.hpp"
#include "fogperc/radio.hpp"
#include "fogperc/world.hpp"

namespace fogperc {

/// Executed (discrete) action of one agent: serving node (0 cloud, n >= 1
/// F-AP n) and the ids of the own sensed blocks to upload.
struct Decision {
  int node = 0;
  std::vector<int> blocks;
};

/// Everything the resource stack produced for one time step.
struct StepOutcome {
  Allocation alloc;
  std::vector<double> rates;  ///< served uplink rate per VUE, bits/s
  LatencyReport latency;
  std::vector<Violation> violations;
  std::vector<double> satisfaction;  ///< U_k
  std::vector<double> limits;        ///< per-VUE latency limit
  double sum_satisfaction = 0.0;
  int matching_iterations = 0;
  std::vector<int> unmatched;
  bool frequency_caps_dropped = false;
};

/// Runs the resource stack for fixed decisions on the current world state:
/// block arbitration, per-cluster swap matching (clusters in node order, each
/// seeing the RBs already fixed in earlier clusters as interference), joint
/// rate evaluation, per-node frequency allocation, then latency, satisfaction
/// and constraint evaluation.
StepOutcome resolve_step(const World& world, const ChannelState& channels, std::span<const Decision> decisions,
                         const ExperimentConfig& cfg, SwapCriterion criterion = SwapCriterion::kMinMaxLatency,
                         const MatchingTrace& trace = {});

/// Fixed-size observation and action vectors. Sensed blocks map to slots by
/// their offset from the block nearest the VUE, measured along its heading.
struct ObservationLayout {
  int slots = 0;
  int nodes = 0;

  static ObservationLayout from(const ScenarioConfig& cfg);
  int obs_dim() const { return 3 + slots + nodes + 1; }
  int act_dim() const { return nodes + slots; }
  /// Half-width of the slot window in blocks.
  int reach() const { return slots / 2; }
};

/// Block id held by `slot` for VUE k, or -1 when the slot is outside the road
/// or not sensed.
int slot_block(const World& world, int k, int slot, const ObservationLayout& layout);

/// Lagged fields of the agent state.
struct StepHistory {
  std::vector<int> node_counts;  ///< O_n(t-1), n = 0..N
  double satisfied_ratio = 0.0;  ///< r_sat(t-1)
  bool valid = false;            ///< false at t = 0: lagged fields are zero
};

/// Agent k's state: tau_max, l_k(t), q_k(t-1) per slot, O_n(t-1), r_sat(t-1),
/// each min-max normalised by scenario bounds.
Eigen::VectorXd encode_state(const World& world, int k, const StepHistory& history, const ObservationLayout& layout);

/// Discretises a continuous action: argmax over node logits (ties to the
/// lower node), and every valid slot with logit > 0 is uploaded.
Decision decode_action(const Eigen::VectorXd& action, const World& world, int k, const ObservationLayout& layout);

struct StepResult {
  StepOutcome outcome;
  double reward = 0.0;   ///< sum satisfaction minus the latency penalty
  double penalty = 0.0;
  int latency_violations = 0;
  int step = 0;          ///< world step the decisions applied to
};

/// One episode of the Markov game: owns the world, samples channels each
/// step and keeps the lagged state fields.
class Environment {
 public:
  Environment(const ExperimentConfig& cfg, std::uint64_t episode_seed);

  const World& world() const { return world_; }
  const ExperimentConfig& config() const { return cfg_; }
  const ObservationLayout& layout() const { return layout_; }
  const StepHistory& history() const { return history_; }
  const ChannelState& channels() const { return channels_; }
  bool done() const { return world_.step() >= cfg_.scenario.steps_per_episode; }

  /// obs_dim x K matrix of every agent's state.
  Eigen::MatrixXd observations() const;

  /// Per-VUE latency-violation penalty weight lambda_p.
  double penalty_weight(int k) const;

  StepResult step(std::span<const Decision> decisions, SwapCriterion criterion = SwapCriterion::kMinMaxLatency,
                  const MatchingTrace& trace = {});

 private:
  ExperimentConfig cfg_;
  World world_;
  ObservationLayout layout_;
  Rng channel_rng_;
  ChannelState channels_;
  StepHistory history_;
};

}  // namespace fogperc
