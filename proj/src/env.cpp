#include "fogperc/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fogperc/cpufreq.hpp"

namespace fogperc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double normalise(double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }

}  // namespace

StepOutcome resolve_step(const World& world, const ChannelState& channels, std::span<const Decision> decisions,
                         const ExperimentConfig& cfg, SwapCriterion criterion, const MatchingTrace& trace) {
  const int k_count = world.num_vues();
  const int nodes = world.num_nodes();
  const int rbs = cfg.radio.rb_count();
  if (static_cast<int>(decisions.size()) != k_count) throw std::invalid_argument("one decision per VUE required");

  StepOutcome out;
  out.alloc = Allocation::empty(k_count, nodes, world.num_blocks(), rbs);
  Allocation& alloc = out.alloc;

  std::vector<int> serving(k_count, -1);
  for (int k = 0; k < k_count; ++k) {
    const Decision& d = decisions[k];
    if (d.node < 0 || d.node >= nodes) throw std::invalid_argument("decision names an unknown node");
    alloc.x.set(k, d.node);
    serving[k] = d.node;
    const auto sensed = world.sensed_blocks(k);
    for (int b : d.blocks) {
      if (!std::binary_search(sensed.begin(), sensed.end(), b))
        throw std::invalid_argument("decision selects a block the VUE does not sense");
      alloc.e.set(k, b);
    }
  }
  alloc.e = arbitrate_block_conflicts(alloc.e, world);

  const RateModel model(world, channels, cfg.radio, serving);
  const double bits = world.config().block_bits;
  std::vector<double> upload(k_count);
  std::vector<bool> cloud(k_count);
  for (int k = 0; k < k_count; ++k) {
    upload[k] = alloc.blocks_selected(k) * bits;
    cloud[k] = serving[k] == 0;
  }

  std::vector<int> rb_of(k_count, kNoRb);
  for (int n = 0; n < nodes; ++n) {
    ClusterProblem p;
    for (int k : cluster_of(n, alloc))
      if (upload[k] > 0.0) p.members.push_back(k);
    if (p.members.empty()) continue;
    p.num_rbs = rbs;
    p.upload_bits = upload;
    p.cloud_mode = cloud;
    p.fronthaul_delay = cfg.radio.fronthaul_delay;
    p.background = rb_of;
    p.rate = [&model](int k, int s, std::span<const int> occ) { return model.rate(k, s, occ); };
    const SwapResult res = swap_matching(p, cfg.matching, criterion, trace);
    for (int k : p.members) rb_of[k] = res.matching.rb_of(k);
    out.matching_iterations += res.iterations;
    out.unmatched.insert(out.unmatched.end(), res.unmatched.begin(), res.unmatched.end());
  }
  for (int k = 0; k < k_count; ++k)
    if (rb_of[k] != kNoRb) alloc.a.set(k, rb_of[k]);

  out.rates.assign(k_count, 0.0);
  for (int k = 0; k < k_count; ++k)
    if (rb_of[k] != kNoRb) out.rates[k] = model.served_rate(k, rb_of);

  // Communication latency does not depend on f; use it to bound compute time.
  const LatencyReport comm_only = evaluate_latencies(alloc, world, out.rates, cfg.radio);
  for (int n = 0; n < nodes; ++n) {
    const auto members = cluster_of(n, alloc);
    if (members.empty()) continue;
    FreqProblem fp;
    fp.budget = world.node(n).f_max;
    for (int k : members) {
      fp.loads.push_back(comp_load(k, alloc, world.region(k), bits, world.config().cycles_per_bit));
      const double cap = latency_limit(k, alloc, world) - comm_only.comm[k];
      // Already past the limit: no cap can help, let the sqrt rule decide.
      fp.caps.push_back(cap > 0.0 && std::isfinite(comm_only.comm[k]) ? cap : kInf);
    }
    FreqSolution sol = allocate_frequencies(fp);
    if (!sol.feasible) {
      sol = allocate_frequencies(FreqProblem::uncapped(fp.loads, fp.budget));
      out.frequency_caps_dropped = true;
    }
    for (std::size_t i = 0; i < members.size(); ++i) alloc.f[members[i]] = sol.f[i];
  }

  out.latency = evaluate_latencies(alloc, world, out.rates, cfg.radio);
  out.satisfaction.resize(k_count);
  for (int k = 0; k < k_count; ++k) {
    out.satisfaction[k] = satisfaction(k, alloc, world, cfg.weights, out.latency.total[k]);
    out.sum_satisfaction += out.satisfaction[k];
  }
  out.limits.resize(k_count);
  for (int k = 0; k < k_count; ++k) out.limits[k] = latency_limit(k, alloc, world);
  out.violations = check_constraints(alloc, world, out.latency.total);
  return out;
}

ObservationLayout ObservationLayout::from(const ScenarioConfig& cfg) {
  const double spacing = cfg.road_length / cfg.num_blocks;
  const int reach = static_cast<int>(std::floor((cfg.sensing_radius + spacing / 2) / spacing));
  return {2 * reach + 1, cfg.num_faps + 1};
}

int slot_block(const World& world, int k, int slot, const ObservationLayout& layout) {
  const auto& cfg = world.config();
  const Vue& v = world.vue(k);
  const double spacing = cfg.road_length / cfg.num_blocks;
  const int nearest = std::clamp(static_cast<int>(std::floor(v.position.x / spacing)), 0, cfg.num_blocks - 1);
  const int dir = v.heading.x < 0.0 ? -1 : 1;
  const int b = nearest + dir * (slot - layout.reach());
  if (b < 0 || b >= cfg.num_blocks) return -1;
  if (distance(v.position, world.blocks()[b].center) > v.sensing_radius + 1e-9) return -1;
  return b;
}

Eigen::VectorXd encode_state(const World& world, int k, const StepHistory& history, const ObservationLayout& layout) {
  const auto& cfg = world.config();
  const Vue& v = world.vue(k);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(layout.obs_dim());
  int i = 0;
  s[i++] = normalise(v.tau_max, 0.0, cfg.tau_max_max);
  s[i++] = normalise(v.position.x, 0.0, cfg.road_length);
  s[i++] = normalise(v.position.y, 0.0, cfg.road_length);
  for (int slot = 0; slot < layout.slots; ++slot, ++i) {
    const int b = slot_block(world, k, slot, layout);
    if (b >= 0) s[i] = world.previous_temporal_value(k, b);
  }
  for (int n = 0; n < layout.nodes; ++n, ++i)
    if (history.valid) s[i] = static_cast<double>(history.node_counts.at(n)) / world.num_vues();
  s[i] = history.valid ? history.satisfied_ratio : 0.0;
  return s;
}

Decision decode_action(const Eigen::VectorXd& action, const World& world, int k, const ObservationLayout& layout) {
  if (action.size() != layout.act_dim()) throw std::invalid_argument("action has the wrong length");
  Decision d;
  for (int n = 1; n < layout.nodes; ++n)
    if (action[n] > action[d.node]) d.node = n;
  for (int slot = 0; slot < layout.slots; ++slot) {
    if (!(action[layout.nodes + slot] > 0.0)) continue;
    const int b = slot_block(world, k, slot, layout);
    if (b >= 0) d.blocks.push_back(b);
  }
  std::sort(d.blocks.begin(), d.blocks.end());
  return d;
}

Environment::Environment(const ExperimentConfig& cfg, std::uint64_t episode_seed)
    : cfg_(cfg),
      world_(cfg.scenario, episode_seed),
      layout_(ObservationLayout::from(cfg.scenario)),
      channel_rng_(stream_seed(episode_seed, "channels")) {
  cfg_.radio.validate(cfg_.scenario.num_rrhs);
  channels_ = sample_channels(world_, cfg_.radio, channel_rng_);
  history_.node_counts.assign(world_.num_nodes(), 0);
}

Eigen::MatrixXd Environment::observations() const {
  Eigen::MatrixXd obs(layout_.obs_dim(), world_.num_vues());
  for (int k = 0; k < world_.num_vues(); ++k) obs.col(k) = encode_state(world_, k, history_, layout_);
  return obs;
}

double Environment::penalty_weight(int k) const {
  return cfg_.training.penalty >= 0.0 ? cfg_.training.penalty : cfg_.weights.eps2 * world_.vue(k).tau_max;
}

StepResult Environment::step(std::span<const Decision> decisions, SwapCriterion criterion,
                             const MatchingTrace& trace) {
  if (done()) throw std::logic_error("episode already finished");
  StepResult r;
  r.step = world_.step();
  r.outcome = resolve_step(world_, channels_, decisions, cfg_, criterion, trace);
  for (const Violation& v : r.outcome.violations) {
    if (v.constraint != Constraint::kLatency) continue;
    ++r.latency_violations;
    r.penalty += penalty_weight(v.index);
  }
  r.reward = r.outcome.sum_satisfaction - r.penalty;

  history_.valid = true;
  for (int n = 0; n < world_.num_nodes(); ++n)
    history_.node_counts[n] = static_cast<int>(cluster_of(n, r.outcome.alloc).size());
  history_.satisfied_ratio =
      1.0 - static_cast<double>(r.latency_violations) / static_cast<double>(world_.num_vues());

  world_.advance();
  if (!done()) channels_ = sample_channels(world_, cfg_.radio, channel_rng_);
  return r;
}

}  // namespace fogperc
