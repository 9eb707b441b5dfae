#include "fogperc/alloc.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "fogperc/radio.hpp"

namespace fogperc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBudgetTolerance = 1e-9;
}  // namespace

Allocation Allocation::empty(int vues, int nodes, int blocks, int rbs) {
  return {BinaryMatrix(vues, nodes), BinaryMatrix(vues, blocks), BinaryMatrix(vues, rbs),
          std::vector<double>(vues, 0.0)};
}

std::optional<int> Allocation::node_of(int k) const {
  if (const auto n = x.first_in_row(k)) return static_cast<int>(*n);
  return std::nullopt;
}

std::vector<int> Allocation::rb_indices() const {
  std::vector<int> out(a.rows(), kNoRb);
  for (std::size_t k = 0; k < a.rows(); ++k)
    if (const auto s = a.first_in_row(k)) out[k] = static_cast<int>(*s);
  return out;
}

std::vector<int> cluster_of(int node, const Allocation& alloc) {
  std::vector<int> out;
  for (int k = 0; k < alloc.num_vues(); ++k)
    if (alloc.x(k, node)) out.push_back(k);
  return out;
}

double member_comm_latency(int k, const Allocation& alloc, double rate, double block_bits, double fronthaul_delay) {
  const double fronthaul = alloc.x(k, 0) ? fronthaul_delay : 0.0;
  const double bits = alloc.blocks_selected(k) * block_bits;
  if (bits == 0.0) return fronthaul;
  if (!(rate > 0.0)) return kInf;
  return bits / rate + fronthaul;
}

double comm_latency(std::span<const int> cluster, const Allocation& alloc, std::span<const double> rates,
                    double block_bits, double fronthaul_delay) {
  double worst = 0.0;
  for (int k : cluster) worst = std::max(worst, member_comm_latency(k, alloc, rates[k], block_bits, fronthaul_delay));
  return worst;
}

double comp_load(int /*k*/, const Allocation& alloc, std::span<const int> region, double block_bits,
                 double cycles_per_bit) {
  double blocks = 0.0;
  for (int owner = 0; owner < alloc.num_vues(); ++owner)
    for (int b : region) blocks += alloc.e(owner, b) ? 1.0 : 0.0;
  return blocks * cycles_per_bit * block_bits;
}

double comp_latency(int k, const Allocation& alloc, std::span<const int> region, const TaskSpec& task) {
  const double load = comp_load(k, alloc, region, task.bits, task.cycles_per_bit);
  if (load == 0.0) return 0.0;
  if (!(alloc.f[k] > 0.0)) return kInf;
  return load / alloc.f[k];
}

double cooperative_value(int k, const Allocation& alloc, const World& world) {
  double value = 0.0;
  for (int b : world.region(k))
    for (int owner = 0; owner < alloc.num_vues(); ++owner)
      if (owner != k && alloc.e(owner, b)) value += world.spatiotemporal_value(k, owner, b);
  return value;
}

double satisfaction(int k, const Allocation& alloc, const World& world, const SatisfactionWeights& weights,
                    double tau_k) {
  const double value_term = weights.eps1 == 0.0 ? 0.0 : weights.eps1 * cooperative_value(k, alloc, world);
  const double latency_term = weights.eps2 == 0.0 ? 0.0 : weights.eps2 * (world.vue(k).tau_max - tau_k);
  return value_term + latency_term;
}

double sum_satisfaction(const Allocation& alloc, const World& world, const SatisfactionWeights& weights,
                        std::span<const double> latencies) {
  double total = 0.0;
  for (int k = 0; k < alloc.num_vues(); ++k) total += satisfaction(k, alloc, world, weights, latencies[k]);
  return total;
}

LatencyReport evaluate_latencies(const Allocation& alloc, const World& world, std::span<const double> rates,
                                 const RadioConfig& radio) {
  const int k_count = alloc.num_vues();
  const double bits = world.config().block_bits;
  LatencyReport out{std::vector<double>(k_count, 0.0), std::vector<double>(k_count, 0.0),
                    std::vector<double>(k_count, 0.0)};
  std::vector<double> cluster_latency(alloc.x.cols(), 0.0);
  for (std::size_t n = 0; n < alloc.x.cols(); ++n)
    cluster_latency[n] = comm_latency(cluster_of(static_cast<int>(n), alloc), alloc, rates, bits,
                                      radio.fronthaul_delay);
  for (int k = 0; k < k_count; ++k) {
    const TaskSpec task{bits, world.config().cycles_per_bit, world.vue(k).tau_max};
    const auto node = alloc.node_of(k);
    out.comm[k] = node ? cluster_latency[*node] : member_comm_latency(k, alloc, 0.0, bits, 0.0);
    out.comp[k] = comp_latency(k, alloc, world.region(k), task);
    out.total[k] = total_latency(out.comm[k], out.comp[k]);
  }
  return out;
}

const char* constraint_tag(Constraint c) {
  switch (c) {
    case Constraint::kLatency: return "latency";
    case Constraint::kBlockExclusive: return "block_exclusive";
    case Constraint::kSingleMode: return "single_mode";
    case Constraint::kSingleRb: return "single_rb";
    case Constraint::kFrequencyBudget: return "frequency_budget";
  }
  return "?";
}

std::string Violation::describe() const {
  std::ostringstream out;
  out << constraint_tag(constraint);
  switch (constraint) {
    case Constraint::kBlockExclusive: out << " block " << index; break;
    case Constraint::kFrequencyBudget: out << " node " << index; break;
    default: out << " vue " << index; break;
  }
  out << " excess " << excess;
  return out.str();
}

double latency_limit(int k, const Allocation& alloc, const World& world) {
  const double tau_max = world.vue(k).tau_max;
  const auto node = alloc.node_of(k);
  if (!node || *node == 0) return tau_max;
  const auto soj = sojourn_time(world.vue(k), world.node(*node));
  return std::min(tau_max, soj.value_or(0.0));
}

std::vector<Violation> check_constraints(const Allocation& alloc, const World& world,
                                         std::span<const double> latencies) {
  std::vector<Violation> out;
  const int k_count = alloc.num_vues();
  for (int k = 0; k < k_count; ++k) {
    const double limit = latency_limit(k, alloc, world);
    if (latencies[k] > limit) out.push_back({Constraint::kLatency, k, latencies[k] - limit});
  }
  for (std::size_t b = 0; b < alloc.e.cols(); ++b) {
    const auto claims = alloc.e.col_sum(b);
    if (claims > 1) out.push_back({Constraint::kBlockExclusive, static_cast<int>(b), static_cast<double>(claims - 1)});
  }
  for (int k = 0; k < k_count; ++k) {
    const auto modes = alloc.x.row_sum(k);
    if (modes > 1) out.push_back({Constraint::kSingleMode, k, static_cast<double>(modes - 1)});
  }
  for (int k = 0; k < k_count; ++k) {
    const auto rbs = alloc.a.row_sum(k);
    if (rbs > 1) out.push_back({Constraint::kSingleRb, k, static_cast<double>(rbs - 1)});
  }
  for (std::size_t n = 0; n < alloc.x.cols(); ++n) {
    double used = 0.0;
    for (int k = 0; k < k_count; ++k)
      if (alloc.x(k, n)) used += alloc.f[k];
    const double budget = world.node(static_cast<int>(n)).f_max;
    if (used > budget * (1.0 + kBudgetTolerance))
      out.push_back({Constraint::kFrequencyBudget, static_cast<int>(n), used - budget});
  }
  return out;
}

BinaryMatrix arbitrate_block_conflicts(const BinaryMatrix& e, const World& world) {
  BinaryMatrix out = e;
  for (std::size_t b = 0; b < e.cols(); ++b) {
    if (e.col_sum(b) <= 1) continue;
    int keeper = -1;
    double best = -1.0;
    for (std::size_t k = 0; k < e.rows(); ++k) {
      if (!e(k, b)) continue;
      const double q = world.temporal_value(static_cast<int>(k), static_cast<int>(b));
      if (q > best) {
        best = q;
        keeper = static_cast<int>(k);
      }
    }
    for (std::size_t k = 0; k < e.rows(); ++k)
      if (static_cast<int>(k) != keeper) out.set(k, b, false);
  }
  return out;
}

}  // namespace fogperc
