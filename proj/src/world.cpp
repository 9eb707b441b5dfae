#include "fogperc/world.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fogperc/error.hpp"

namespace fogperc {

namespace {
constexpr double kRowTolerance = 1e-9;
// Boundary slack for "within radius" tests, so blocks exactly on the circle
// are counted despite rounding in the subtraction.
constexpr double kGeomSlack = 1e-9;
}  // namespace

ValueChainModel::ValueChainModel(std::vector<double> levels, std::vector<std::vector<double>> transition)
    : levels_(std::move(levels)), transition_(std::move(transition)) {
  const std::size_t z = levels_.size();
  if (z < 2) throw std::invalid_argument("value chain needs at least two levels");
  if (transition_.size() != z) throw ShapeError("transition matrix must be Z x Z");
  for (double q : levels_)
    if (!(q >= 0.0)) throw std::invalid_argument("value levels must be >= 0");
  for (const auto& row : transition_) {
    if (row.size() != z) throw ShapeError("transition matrix must be Z x Z");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw std::invalid_argument("transition probabilities must be >= 0");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) throw std::invalid_argument("transition rows must sum to 1");
  }
}

ValueChainModel ValueChainModel::birth_death(int levels, double p_down, double p_up, double p_regen) {
  if (levels < 2) throw std::invalid_argument("value chain needs at least two levels");
  if (p_down < 0 || p_up < 0 || p_regen < 0 || p_down + p_up + p_regen > 1.0)
    throw std::invalid_argument("birth-death probabilities must be >= 0 and sum to <= 1");
  const auto z = static_cast<std::size_t>(levels);
  std::vector<double> q(z);
  for (std::size_t i = 0; i < z; ++i) q[i] = static_cast<double>(i) / static_cast<double>(z - 1);
  std::vector<std::vector<double>> p(z, std::vector<double>(z, 0.0));
  for (std::size_t i = 0; i < z; ++i) {
    p[i][z - 1] += p_regen;
    p[i][i > 0 ? i - 1 : i] += p_down;
    p[i][i + 1 < z ? i + 1 : i] += p_up;
    p[i][i] += 1.0 - p_down - p_up - p_regen;
  }
  return ValueChainModel(std::move(q), std::move(p));
}

double ValueChainModel::max_level() const { return *std::max_element(levels_.begin(), levels_.end()); }

int step_value_chain(const ValueChainModel& chain, int state, Rng& rng) {
  const auto& row = chain.row(state);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t z = 0; z < row.size(); ++z) {
    acc += row[z];
    if (u < acc) return static_cast<int>(z);
  }
  // u landed in the rounding gap above the cumulative sum: take the last
  // state with positive mass.
  for (std::size_t z = row.size(); z-- > 0;)
    if (row[z] > 0.0) return static_cast<int>(z);
  return state;
}

double temporal_value_linear(double q0, double t0, double t, double tau_dll) {
  const double elapsed = t - t0;
  if (elapsed >= tau_dll) return 0.0;
  return std::max(0.0, -(q0 / tau_dll) * elapsed + q0);
}

double spatial_value(const Vue& vue, const Block& block, double d_exp) {
  const double projected = std::abs(dot(block.center - vue.position, vue.heading));
  return std::clamp((d_exp - projected) / d_exp, 0.0, 1.0);
}

void advance_mobility(std::span<Vue> vues, double dt, double road_length) {
  for (auto& v : vues) {
    v.position = v.position + (v.velocity * dt) * v.heading;
    double x = std::fmod(v.position.x, road_length);
    if (x < 0) x += road_length;
    v.position.x = x;
  }
}

std::optional<double> sojourn_time(const Vue& vue, const InfraNode& fap) {
  const Vec2 d = vue.position - fap.position;
  const double r2 = fap.coverage_radius * fap.coverage_radius;
  const double c = dot(d, d) - r2;
  if (c > kGeomSlack * std::max(1.0, r2)) return std::nullopt;
  const Vec2 w = vue.velocity * vue.heading;
  const double a = dot(w, w);
  if (a == 0.0) return std::numeric_limits<double>::infinity();
  const double b = 2.0 * dot(d, w);
  const double disc = std::max(0.0, b * b - 4.0 * a * c);
  return std::max(0.0, (-b + std::sqrt(disc)) / (2.0 * a));
}

std::vector<int> sensed_blocks(const Vue& vue, std::span<const Block> blocks) {
  std::vector<int> out;
  for (const auto& b : blocks)
    if (distance(vue.position, b.center) <= vue.sensing_radius + kGeomSlack) out.push_back(b.id);
  return out;
}

std::vector<int> region_of_interest(const Vue& vue, std::span<const Block> blocks, double d_exp) {
  std::vector<int> out;
  for (const auto& b : blocks) {
    const double ahead = dot(b.center - vue.position, vue.heading);
    if (ahead >= 0.0 && ahead <= d_exp + kGeomSlack) out.push_back(b.id);
  }
  return out;
}

World::World(const ScenarioConfig& config, std::uint64_t seed)
    : config_(config),
      chain_(ValueChainModel::birth_death(config.value_levels, config.p_down, config.p_up, config.p_regen)),
      value_rng_(stream_seed(seed, "values")) {
  config_.validate();
  Rng placement(stream_seed(seed, "mobility"));

  const double spacing = config_.road_length / config_.num_blocks;
  for (int b = 0; b < config_.num_blocks; ++b) blocks_.push_back({b, {(b + 0.5) * spacing, 0.0}});

  cloud_ = {NodeKind::kCloud, 0, {config_.road_length / 2, 0.0}, config_.cloud_f_max, 0.0};
  for (int n = 0; n < config_.num_faps; ++n)
    faps_.push_back({NodeKind::kFap, n + 1, {config_.road_length * (n + 0.5) / config_.num_faps, config_.fap_y},
                     config_.fap_f_max, config_.fap_coverage});
  for (int m = 0; m < config_.num_rrhs; ++m)
    rrhs_.push_back({NodeKind::kRrh, m, {config_.road_length * (m + 0.5) / config_.num_rrhs, config_.rrh_y}, 0.0, 0.0});

  for (int k = 0; k < config_.num_vues; ++k) {
    Vue v;
    v.id = k;
    v.position = {placement.uniform(0.0, config_.road_length), 0.0};
    v.velocity = placement.uniform(config_.speed_min, config_.speed_max);
    const bool reverse = config_.bidirectional && placement.uniform() < 0.5;
    v.heading = {reverse ? -1.0 : 1.0, 0.0};
    v.tx_power = config_.tx_power;
    v.tau_max = placement.uniform(config_.tau_max_min, config_.tau_max_max);
    v.sensing_radius = config_.sensing_radius;
    vues_.push_back(v);
  }

  const int z = chain_.size();
  states_.resize(static_cast<std::size_t>(config_.num_vues) * blocks_.size());
  for (auto& s : states_)
    s = config_.initial_value == InitialValue::kTop ? z - 1 : static_cast<int>(value_rng_.index(z));
  previous_states_.clear();
}

double World::previous_temporal_value(int k, int b) const {
  if (previous_states_.empty()) return 0.0;
  return chain_.level(previous_states_.at(static_cast<std::size_t>(k) * blocks_.size() + b));
}

void World::set_state(int k, int b, int z) {
  if (z < 0 || z >= chain_.size()) throw std::out_of_range("chain state out of range");
  states_.at(static_cast<std::size_t>(k) * blocks_.size() + b) = z;
}

double World::spatial_value(int k, int b) const { return fogperc::spatial_value(vues_.at(k), blocks_.at(b), config_.d_exp); }

double World::spatiotemporal_value(int k, int owner, int b) const {
  return fogperc::spatiotemporal_value(temporal_value(owner, b), spatial_value(k, b));
}

std::vector<int> World::sensed_blocks(int k) const { return fogperc::sensed_blocks(vues_.at(k), blocks_); }

std::vector<int> World::region(int k) const { return region_of_interest(vues_.at(k), blocks_, config_.d_exp); }

void World::advance() {
  advance_mobility(vues_, config_.dt, config_.road_length);
  previous_states_ = states_;
  for (auto& s : states_) s = step_value_chain(chain_, s, value_rng_);
  ++step_;
}

}  // namespace fogperc
