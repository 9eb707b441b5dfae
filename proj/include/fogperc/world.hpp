#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fogperc/config.hpp"
#include "fogperc/rng.hpp"

namespace fogperc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

struct Vue {
  int id = 0;
  Vec2 position;
  double velocity = 0.0;   ///< signed speed along `heading`, m/s
  Vec2 heading{1.0, 0.0};  ///< unit vector
  double tx_power = 0.0;
  double tau_max = 0.0;
  double sensing_radius = 0.0;
};

struct Block {
  int id = 0;
  Vec2 center;
};

enum class NodeKind { kCloud, kFap, kRrh };

struct InfraNode {
  NodeKind kind = NodeKind::kCloud;
  int id = 0;
  Vec2 position;
  double f_max = 0.0;            ///< cloud and F-APs only
  double coverage_radius = 0.0;  ///< F-APs only
};

/// Levels and transition matrix of the temporal value Markov chain. States
/// are 0-based; level z is q_{z+1} in the usual 1-based notation.
class ValueChainModel {
 public:
  ValueChainModel(std::vector<double> levels, std::vector<std::vector<double>> transition);

  /// Z uniformly spaced levels in [0, 1] with a birth-death transition
  /// (down with p_down, up with p_up) plus a jump to the top level with
  /// p_regen. Mass that would leave the ladder stays in place.
  static ValueChainModel birth_death(int levels, double p_down, double p_up, double p_regen);

  int size() const noexcept { return static_cast<int>(levels_.size()); }
  double level(int z) const { return levels_.at(z); }
  double max_level() const;
  const std::vector<double>& row(int z) const { return transition_.at(z); }
  const std::vector<std::vector<double>>& transition() const noexcept { return transition_; }

 private:
  std::vector<double> levels_;
  std::vector<std::vector<double>> transition_;
};

/// Samples the next chain state from row `state`.
int step_value_chain(const ValueChainModel& chain, int state, Rng& rng);

/// Linear decay q0 - (q0/tau_dll)(t - t0), clamped at 0 past the deadline.
double temporal_value_linear(double q0, double t0, double t, double tau_dll);

/// (d_exp - |d cos theta|) / d_exp clamped to [0, 1], where d cos theta is
/// the projection of the VUE->block vector on the VUE heading.
double spatial_value(const Vue& vue, const Block& block, double d_exp);

inline double spatiotemporal_value(double owner_temporal_value, double spatial) {
  return owner_temporal_value * spatial;
}

/// Moves every VUE by velocity*dt along its heading, wrapping at road ends.
void advance_mobility(std::span<Vue> vues, double dt, double road_length);

/// Time until the straight-line trajectory leaves the F-AP coverage disc;
/// +inf when stationary, nullopt when the VUE is outside coverage.
std::optional<double> sojourn_time(const Vue& vue, const InfraNode& fap);

/// Blocks whose center lies within the VUE's sensing radius, ascending ids.
std::vector<int> sensed_blocks(const Vue& vue, std::span<const Block> blocks);

/// Blocks ahead of the VUE whose projection on the heading lies in [0, d_exp].
std::vector<int> region_of_interest(const Vue& vue, std::span<const Block> blocks, double d_exp);

class World {
 public:
  World(const ScenarioConfig& config, std::uint64_t seed);

  const ScenarioConfig& config() const noexcept { return config_; }
  int num_vues() const noexcept { return static_cast<int>(vues_.size()); }
  int num_blocks() const noexcept { return static_cast<int>(blocks_.size()); }
  int num_faps() const noexcept { return static_cast<int>(faps_.size()); }
  int num_nodes() const noexcept { return num_faps() + 1; }

  std::span<const Vue> vues() const noexcept { return vues_; }
  std::span<Vue> mutable_vues() noexcept { return vues_; }
  const Vue& vue(int k) const { return vues_.at(k); }
  std::span<const Block> blocks() const noexcept { return blocks_; }
  const InfraNode& cloud() const noexcept { return cloud_; }
  std::span<const InfraNode> faps() const noexcept { return faps_; }
  std::span<const InfraNode> rrhs() const noexcept { return rrhs_; }
  /// Computing node n: 0 is the cloud, n >= 1 is F-AP n-1.
  const InfraNode& node(int n) const { return n == 0 ? cloud_ : faps_.at(n - 1); }

  const ValueChainModel& chain() const noexcept { return chain_; }

  int step() const noexcept { return step_; }
  double time() const noexcept { return step_ * config_.dt; }

  /// q_{k,b}(t) of VUE k's message for block b.
  double temporal_value(int k, int b) const { return chain_.level(state(k, b)); }
  /// q_{k,b}(t-1); zero before the first step.
  double previous_temporal_value(int k, int b) const;
  int state(int k, int b) const { return states_.at(static_cast<std::size_t>(k) * blocks_.size() + b); }
  void set_state(int k, int b, int z);

  double spatial_value(int k, int b) const;
  /// u_{k,k',b}(t) = q_{k',b}(t) w_{k,b}(t).
  double spatiotemporal_value(int k, int owner, int b) const;

  std::vector<int> sensed_blocks(int k) const;
  std::vector<int> region(int k) const;

  /// Moves the clock one step: mobility, then every value chain.
  void advance();

 private:
  ScenarioConfig config_;
  std::vector<Vue> vues_;
  std::vector<Block> blocks_;
  InfraNode cloud_;
  std::vector<InfraNode> faps_;
  std::vector<InfraNode> rrhs_;
  ValueChainModel chain_;
  std::vector<int> states_;
  std::vector<int> previous_states_;
  int step_ = 0;
  Rng value_rng_;
};

}  // namespace fogperc
