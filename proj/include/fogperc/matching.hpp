#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "fogperc/config.hpp"

namespace fogperc {

/// Partial one-to-one map between VUEs (global ids) and RBs.
class Matching {
 public:
  Matching() = default;
  Matching(int vues, int rbs) : rb_of_(vues, -1), vue_of_(rbs, -1) {}

  int rb_of(int k) const { return rb_of_.at(k); }
  int vue_of(int s) const { return vue_of_.at(s); }
  bool matched(int k) const { return rb_of_.at(k) >= 0; }

  void pair(int k, int s);
  void unpair_vue(int k);
  /// Exchanges the RBs of two matched VUEs.
  void swap(int k, int k2);

  int num_vues() const { return static_cast<int>(rb_of_.size()); }
  int num_rbs() const { return static_cast<int>(vue_of_.size()); }
  const std::vector<int>& rb_assignment() const { return rb_of_; }

  /// k = Phi(s) iff s = Phi(k), and each side holds at most one partner.
  bool consistent() const;

  friend bool operator==(const Matching&, const Matching&) = default;

 private:
  std::vector<int> rb_of_;
  std::vector<int> vue_of_;
};

/// Rate of VUE k on RB s given everyone else's RB (background clusters plus
/// the cluster's tentative matching); rb_of[k] itself is ignored.
using RateFunction = std::function<double(int k, int s, std::span<const int> rb_of)>;

/// One cluster's RB allocation problem.
struct ClusterProblem {
  std::vector<int> members;            ///< global VUE ids, ascending
  int num_rbs = 0;
  std::vector<double> upload_bits;     ///< indexed by global VUE id
  std::vector<bool> cloud_mode;        ///< indexed by global VUE id
  double fronthaul_delay = 0.0;
  std::vector<int> background;         ///< RB of every non-member VUE (kNoRb for none)
  RateFunction rate;

  int num_vues() const { return static_cast<int>(background.size()); }
};

/// phi_k: VUE k's rate on RB s.
double vue_utility(const ClusterProblem& p, int k, int s, std::span<const int> rb_of);

/// phi_s: the latency VUE k would contribute on RB s (lower is preferred).
double rb_utility(const ClusterProblem& p, int s, int k, std::span<const int> rb_of);

struct PreferenceLists {
  std::vector<std::vector<int>> vue_prefs;  ///< per member (cluster order): RBs by descending rate
  std::vector<std::vector<int>> rb_prefs;   ///< per RB: members by ascending latency contribution
};

/// Builds both sides' lists with every member unassigned (only background
/// interference). Ties go to the lower id.
PreferenceLists build_preferences(const ClusterProblem& p);

/// Structured debug trace of proposal rounds and swaps (JSON lines).
struct MatchingTrace {
  std::ostream* out = nullptr;
  void proposal(int round, int k, int s, bool accepted) const;
  void swap(int iteration, int k, int k2, double before, double after) const;
};

/// Proposal phase. Unmatched VUEs propose to their best RB that has not
/// rejected them; each RB keeps its favourite among new proposers. Under
/// kHoldFirst an RB that already holds a VUE rejects everyone; under
/// kDisplace it trades up and frees the previous holder.
Matching deferred_acceptance(std::span<const int> members, int num_vues, int num_rbs,
                             const PreferenceLists& prefs, ProposalRule rule, const MatchingTrace& trace = {});

/// RB assignment of every VUE: background plus the cluster's matching.
std::vector<int> combined_assignment(const ClusterProblem& p, const Matching& m);

/// Cluster communication latency under matching m. Unmatched members with
/// upload load make it +inf.
double bottleneck_latency(const ClusterProblem& p, const Matching& m);

/// Sum of the members' rates under m.
double cluster_sum_rate(const ClusterProblem& p, const Matching& m);

enum class SwapCriterion {
  kMinMaxLatency,  ///< accept a swap iff the cluster bottleneck latency strictly drops
  kMaxSumRate,     ///< accept a swap iff the cluster sum rate strictly rises
};

/// First matched pair (k < k') in lexicographic order whose RB exchange
/// strictly improves the criterion.
std::optional<std::pair<int, int>> find_improving_swap(const ClusterProblem& p, const Matching& m,
                                                       SwapCriterion criterion = SwapCriterion::kMinMaxLatency);

struct SwapResult {
  Matching matching;
  int iterations = 0;                 ///< accepted swaps
  std::vector<double> latency_trace;  ///< bottleneck latency after DA and after each swap
  std::vector<int> unmatched;         ///< members left without an RB
};

/// Deferred acceptance followed by improving swaps until none remains.
SwapResult swap_matching(const ClusterProblem& p, const MatchingConfig& cfg,
                         SwapCriterion criterion = SwapCriterion::kMinMaxLatency, const MatchingTrace& trace = {});

/// Enumerates every injective member -> RB assignment; returns one with the
/// smallest bottleneck latency (first found on ties). Refuses instances with
/// more members or RBs than `cap`.
Matching exhaustive_rb_search(const ClusterProblem& p, int cap = 8);

/// Number of assignments exhaustive_rb_search enumerates: S! / (S - K)!.
long long assignment_count(int members, int rbs);

}  // namespace fogperc
