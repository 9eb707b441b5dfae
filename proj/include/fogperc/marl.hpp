#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "fogperc/config.hpp"
#include "fogperc/env.hpp"
#include "fogperc/neural.hpp"
#include "fogperc/rng.hpp"

namespace fogperc {

/// Centralised critic of one agent: per-agent embeddings g(s_j, a_j),
/// attention over the other agents' embeddings, and a head on
/// [g(s_k, a_k); v_k] producing Q_k.
///
/// Inputs are agent-major: column j * batch + b holds [s_j; a_j] of sample b.
class AttentionCritic {
 public:
  AttentionCritic() = default;
  AttentionCritic(int input_dim, int agents, int agent, const TrainingConfig& cfg, Rng& rng,
                  Activation hidden = Activation::kRelu);

  int input_dim() const { return input_dim_; }
  int agents() const { return agents_; }
  int agent() const { return agent_; }

  /// 1 x batch Q values; caches intermediates for backward().
  Matrix forward(const Matrix& x);
  Matrix predict(const Matrix& x) const;
  /// dL/dx for dL/dQ = upstream (1 x batch); accumulates parameter grads.
  Matrix backward(const Matrix& upstream);
  /// Attention weights over agents (agents x batch) for inputs x.
  Matrix attention_weights(const Matrix& x) const;

  void zero_grad();
  std::vector<ParamRef> params();

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  Matrix embed(const Matrix& x, bool cache);
  Matrix embed_const(const Matrix& x) const;
  Matrix head_input(const Matrix& e, const Matrix& values) const;

  int input_dim_ = 0, agents_ = 0, agent_ = 0, embed_dim_ = 0;
  std::vector<DenseNet> embeddings_;  ///< one shared net, or one per agent
  AttentionBlock attention_;
  DenseNet head_;
  int cached_batch_ = -1;
};

/// Actor mu_k: state -> action in [-1, 1]^act_dim.
DenseNet make_actor(int obs_dim, int act_dim, int hidden, Rng& rng);

/// One transition of the joint game. Matrices are (dim x agents).
struct Experience {
  Matrix state;
  Matrix action;
  double reward = 0.0;
  Matrix next_state;
  Matrix next_action;  ///< executed next actions; empty unless stored
  bool terminal = false;
};

/// Fixed-capacity FIFO replay memory with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 1);

  void push(Experience e);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// Index of the most recently pushed transition.
  Experience& latest();
  const Experience& at(std::size_t i) const { return data_.at(i); }
  std::vector<std::size_t> sample(std::size_t batch, Rng& rng) const;

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Experience> data_;
};

/// MADDPG learners (actor, critic, their targets and optimizers) for K agents.
class Maddpg {
 public:
  Maddpg(const ObservationLayout& layout, int agents, const TrainingConfig& cfg, Rng& init);

  int agents() const { return static_cast<int>(actors_.size()); }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }

  /// Deterministic joint action (act_dim x agents).
  Matrix act(const Matrix& states) const;
  /// Gaussian exploration noise, clipped to [-1, 1]. Block-logit noise of
  /// one agent shares a common component with correlation noise_correlation.
  Matrix explore(const Matrix& states, double noise, Rng& rng) const;

  /// Joint critic input built from per-sample (dim x agents) matrices.
  Matrix joint_input(const std::vector<const Matrix*>& states, const std::vector<const Matrix*>& actions) const;

  /// One critic step on the TD target r + gamma (1 - done) Q'_k(s', a').
  double critic_update(int k, const std::vector<const Experience*>& batch);
  /// One deterministic policy gradient step; returns the actor gradient norm.
  double actor_update(int k, const std::vector<const Experience*>& batch);
  void update_targets(int k);

  DenseNet& actor(int k) { return actors_.at(k); }
  AttentionCritic& critic(int k) { return critics_.at(k); }

  void save(BinaryWriter& w) const;
  void load(BinaryReader& r);

 private:
  TrainingConfig cfg_;
  int obs_dim_, act_dim_, nodes_;
  std::vector<DenseNet> actors_, target_actors_;
  std::vector<AttentionCritic> critics_, target_critics_;
  std::vector<Adam> actor_opts_, critic_opts_;
};

/// Per-episode training record.
struct EpisodeLog {
  int episode = 0;
  double reward = 0.0;            ///< sum over steps
  double sum_satisfaction = 0.0;  ///< sum over steps and VUEs of U_k
  double penalty = 0.0;
  int latency_violations = 0;
  int other_violations = 0;       ///< block, mode, RB and budget constraints
  double violation_rate = 0.0;    ///< latency violations / (K * T)
  double critic_loss = 0.0;       ///< mean over update rounds
  double actor_grad_norm = 0.0;   ///< mean over update rounds
  double noise = 0.0;
  int updates = 0;
};

/// Seed of training episode e (0-based) under root seed `root`.
std::uint64_t episode_seed(std::uint64_t root, int episode);

/// Algorithm driver: episodes of interaction, replay and updates.
class Trainer {
 public:
  explicit Trainer(const ExperimentConfig& cfg);

  const ExperimentConfig& config() const { return cfg_; }
  const ObservationLayout& layout() const { return layout_; }
  int episodes_done() const { return static_cast<int>(history_.size()); }
  const std::vector<EpisodeLog>& history() const { return history_; }
  Maddpg& learners() { return learners_; }
  const Maddpg& learners() const { return learners_; }
  const ReplayBuffer& buffer() const { return buffer_; }

  /// Exploration scale of episode e: linear from noise_start to noise_end.
  double noise_at(int episode) const;

  EpisodeLog run_episode();
  /// Runs until `cfg.training.episodes` episodes are done.
  void train(const std::function<void(const EpisodeLog&)>& on_episode = {});

  /// Greedy decisions of the current actors.
  std::vector<Decision> decide(const Environment& env) const;

  /// Called after every environment step with the episode index.
  void set_step_observer(std::function<void(int, const StepResult&)> observer) { observer_ = std::move(observer); }

  void save_checkpoint(const std::filesystem::path& path) const;
  void load_checkpoint(const std::filesystem::path& path);

 private:
  ExperimentConfig cfg_;
  ObservationLayout layout_;
  RngStreams streams_;
  Maddpg learners_;
  ReplayBuffer buffer_;
  std::vector<EpisodeLog> history_;
  long env_steps_ = 0;
  std::function<void(int, const StepResult&)> observer_;
};

/// Learning-curve CSV (one row per episode).
void write_learning_curve(const std::filesystem::path& path, const std::vector<EpisodeLog>& history);

}  // namespace fogperc
