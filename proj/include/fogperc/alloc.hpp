#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fogperc/binary_matrix.hpp"
#include "fogperc/config.hpp"
#include "fogperc/world.hpp"

namespace fogperc {

/// (I, mu, tau_max) of one perception task.
struct TaskSpec {
  double bits = 0.0;
  double cycles_per_bit = 0.0;
  double tau_max = 0.0;
};

/// The four decision variables. x is K x (N+1) with column 0 the cloud;
/// e is K x B; a is K x S; f holds the CPU frequency each VUE gets at its
/// serving node.
struct Allocation {
  BinaryMatrix x;
  BinaryMatrix e;
  BinaryMatrix a;
  std::vector<double> f;

  static Allocation empty(int vues, int nodes, int blocks, int rbs);

  int num_vues() const { return static_cast<int>(x.rows()); }
  std::optional<int> node_of(int k) const;
  /// Per-VUE RB index, kNoRb (-1) when none.
  std::vector<int> rb_indices() const;
  int blocks_selected(int k) const { return static_cast<int>(e.row_sum(k)); }
};

/// K_n: every VUE with x_{k,n} = 1.
std::vector<int> cluster_of(int node, const Allocation& alloc);

/// Upload time of one cluster member: sum_b e_{k,b} I / R_k plus the
/// fronthaul delay in cloud mode. +inf if blocks are selected at zero rate.
double member_comm_latency(int k, const Allocation& alloc, double rate, double block_bits, double fronthaul_delay);

/// Cluster communication latency: the slowest member's upload time.
double comm_latency(std::span<const int> cluster, const Allocation& alloc, std::span<const double> rates,
                    double block_bits, double fronthaul_delay);

/// CPU cycles of task k: every selected block (any owner) inside `region`.
double comp_load(int k, const Allocation& alloc, std::span<const int> region, double block_bits,
                 double cycles_per_bit);

/// comp_load / f_k; 0 for zero load, +inf for positive load with f_k = 0.
double comp_latency(int k, const Allocation& alloc, std::span<const int> region, const TaskSpec& task);

inline double total_latency(double comm, double comp) { return comm + comp; }

/// U_k = eps1 * sum_{b in region} sum_{k' != k} e_{k',b} u_{k,k',b} + eps2 (tau_max - tau_k).
double satisfaction(int k, const Allocation& alloc, const World& world, const SatisfactionWeights& weights,
                    double tau_k);

/// Value part of U_k alone (before the eps1 weight).
double cooperative_value(int k, const Allocation& alloc, const World& world);

double sum_satisfaction(const Allocation& alloc, const World& world, const SatisfactionWeights& weights,
                        std::span<const double> latencies);

struct LatencyReport {
  std::vector<double> comm;
  std::vector<double> comp;
  std::vector<double> total;
};

/// comm/comp/total latency of every VUE from served rates (one per VUE).
LatencyReport evaluate_latencies(const Allocation& alloc, const World& world, std::span<const double> rates,
                                 const RadioConfig& radio);

enum class Constraint { kLatency, kBlockExclusive, kSingleMode, kSingleRb, kFrequencyBudget };

/// Short snake_case name used in metrics and reports.
const char* constraint_tag(Constraint c);

struct Violation {
  Constraint constraint;
  int index = 0;        ///< VUE, block (exclusivity) or node (budget)
  double excess = 0.0;  ///< how far past the limit
  std::string describe() const;
};

/// Per-VUE latency limit: min(tau_max, sojourn) in F-AP mode,
/// tau_max in cloud mode. A VUE in F-AP mode outside coverage has limit 0.
double latency_limit(int k, const Allocation& alloc, const World& world);

std::vector<Violation> check_constraints(const Allocation& alloc, const World& world,
                                         std::span<const double> latencies);

/// Resolves blocks claimed by several VUEs: the owner with the highest
/// current temporal value keeps it, ties to the lower VUE id.
BinaryMatrix arbitrate_block_conflicts(const BinaryMatrix& e, const World& world);

}  // namespace fogperc
