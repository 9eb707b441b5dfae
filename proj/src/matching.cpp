#include "fogperc/matching.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fogperc/error.hpp"

namespace fogperc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative margin a swap must clear; keeps rounding noise from counting as
// an improvement and cycling.
constexpr double kStrictMargin = 1e-12;

bool strictly_less(double after, double before) {
  if (std::isinf(before)) return !std::isinf(after);
  return after < before - kStrictMargin * std::abs(before);
}

}  // namespace

void Matching::pair(int k, int s) {
  if (rb_of_.at(k) >= 0 || vue_of_.at(s) >= 0) throw std::logic_error("pairing an already matched VUE or RB");
  rb_of_[k] = s;
  vue_of_[s] = k;
}

void Matching::unpair_vue(int k) {
  const int s = rb_of_.at(k);
  if (s < 0) return;
  vue_of_[s] = -1;
  rb_of_[k] = -1;
}

void Matching::swap(int k, int k2) {
  const int s = rb_of_.at(k);
  const int s2 = rb_of_.at(k2);
  if (s < 0 || s2 < 0) throw std::logic_error("swap needs two matched VUEs");
  rb_of_[k] = s2;
  rb_of_[k2] = s;
  vue_of_[s] = k2;
  vue_of_[s2] = k;
}

bool Matching::consistent() const {
  for (int k = 0; k < num_vues(); ++k) {
    const int s = rb_of_[k];
    if (s >= num_rbs()) return false;
    if (s >= 0 && vue_of_[s] != k) return false;
  }
  for (int s = 0; s < num_rbs(); ++s) {
    const int k = vue_of_[s];
    if (k >= num_vues()) return false;
    if (k >= 0 && rb_of_[k] != s) return false;
  }
  return true;
}

double vue_utility(const ClusterProblem& p, int k, int s, std::span<const int> rb_of) { return p.rate(k, s, rb_of); }

double rb_utility(const ClusterProblem& p, int s, int k, std::span<const int> rb_of) {
  const double fronthaul = p.cloud_mode[k] ? p.fronthaul_delay : 0.0;
  const double bits = p.upload_bits[k];
  if (bits == 0.0) return fronthaul;
  const double r = p.rate(k, s, rb_of);
  if (!(r > 0.0)) return kInf;
  return bits / r + fronthaul;
}

PreferenceLists build_preferences(const ClusterProblem& p) {
  const std::vector<int>& rb_of = p.background;
  PreferenceLists prefs;
  std::vector<std::vector<double>> rate(p.members.size(), std::vector<double>(p.num_rbs));
  std::vector<std::vector<double>> contrib(p.members.size(), std::vector<double>(p.num_rbs));
  for (std::size_t i = 0; i < p.members.size(); ++i)
    for (int s = 0; s < p.num_rbs; ++s) {
      rate[i][s] = vue_utility(p, p.members[i], s, rb_of);
      contrib[i][s] = rb_utility(p, s, p.members[i], rb_of);
    }
  for (std::size_t i = 0; i < p.members.size(); ++i) {
    std::vector<int> order(p.num_rbs);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rate[i][a] > rate[i][b]; });
    prefs.vue_prefs.push_back(std::move(order));
  }
  for (int s = 0; s < p.num_rbs; ++s) {
    std::vector<int> order(p.members.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return contrib[a][s] < contrib[b][s]; });
    std::vector<int> ids;
    for (int i : order) ids.push_back(p.members[i]);
    prefs.rb_prefs.push_back(std::move(ids));
  }
  return prefs;
}

void MatchingTrace::proposal(int round, int k, int s, bool accepted) const {
  if (!out) return;
  *out << nlohmann::json{{"event", "propose"}, {"round", round}, {"vue", k}, {"rb", s}, {"accepted", accepted}}.dump()
       << '\n';
}

void MatchingTrace::swap(int iteration, int k, int k2, double before, double after) const {
  if (!out) return;
  *out << nlohmann::json{{"event", "swap"}, {"iteration", iteration}, {"vue", k}, {"vue2", k2},
                         {"before", before}, {"after", after}}
              .dump()
       << '\n';
}

Matching deferred_acceptance(std::span<const int> members, int num_vues, int num_rbs, const PreferenceLists& prefs,
                             ProposalRule rule, const MatchingTrace& trace) {
  if (prefs.vue_prefs.size() != members.size() || static_cast<int>(prefs.rb_prefs.size()) != num_rbs)
    throw ShapeError("preference lists do not match the cluster");
  Matching m(num_vues, num_rbs);
  // rank[s][k]: position of VUE k in RB s's list.
  std::vector<std::vector<int>> rank(num_rbs, std::vector<int>(num_vues, std::numeric_limits<int>::max()));
  for (int s = 0; s < num_rbs; ++s)
    for (std::size_t pos = 0; pos < prefs.rb_prefs[s].size(); ++pos) rank[s][prefs.rb_prefs[s][pos]] = static_cast<int>(pos);

  std::vector<std::size_t> next(members.size(), 0);
  for (int round = 1;; ++round) {
    std::vector<std::vector<std::size_t>> proposals(num_rbs);
    bool any = false;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (m.matched(members[i]) || next[i] >= prefs.vue_prefs[i].size()) continue;
      proposals[prefs.vue_prefs[i][next[i]]].push_back(i);
      any = true;
    }
    if (!any) break;
    for (int s = 0; s < num_rbs; ++s) {
      auto& props = proposals[s];
      if (props.empty()) continue;
      const int holder = m.vue_of(s);
      std::size_t best = props.front();
      for (std::size_t i : props)
        if (rank[s][members[i]] < rank[s][members[best]]) best = i;
      bool accept = holder < 0;
      if (holder >= 0 && rule == ProposalRule::kDisplace && rank[s][members[best]] < rank[s][holder]) {
        m.unpair_vue(holder);
        const auto it = std::find(members.begin(), members.end(), holder);
        ++next[static_cast<std::size_t>(it - members.begin())];
        accept = true;
      }
      for (std::size_t i : props) {
        const bool ok = accept && i == best;
        trace.proposal(round, members[i], s, ok);
        if (ok) m.pair(members[i], s);
        else ++next[i];
      }
    }
  }
  return m;
}

std::vector<int> combined_assignment(const ClusterProblem& p, const Matching& m) {
  std::vector<int> rb_of = p.background;
  for (int k : p.members) rb_of[k] = m.rb_of(k);
  return rb_of;
}

double bottleneck_latency(const ClusterProblem& p, const Matching& m) {
  const auto rb_of = combined_assignment(p, m);
  double worst = 0.0;
  for (int k : p.members) {
    const double fronthaul = p.cloud_mode[k] ? p.fronthaul_delay : 0.0;
    double lat = fronthaul;
    if (p.upload_bits[k] > 0.0) {
      if (rb_of[k] < 0) return kInf;
      const double r = p.rate(k, rb_of[k], rb_of);
      lat = r > 0.0 ? p.upload_bits[k] / r + fronthaul : kInf;
    }
    worst = std::max(worst, lat);
  }
  return worst;
}

double cluster_sum_rate(const ClusterProblem& p, const Matching& m) {
  const auto rb_of = combined_assignment(p, m);
  double total = 0.0;
  for (int k : p.members)
    if (rb_of[k] >= 0) total += p.rate(k, rb_of[k], rb_of);
  return total;
}

std::optional<std::pair<int, int>> find_improving_swap(const ClusterProblem& p, const Matching& m,
                                                       SwapCriterion criterion) {
  const bool latency = criterion == SwapCriterion::kMinMaxLatency;
  const double before = latency ? bottleneck_latency(p, m) : cluster_sum_rate(p, m);
  Matching trial = m;
  for (std::size_t i = 0; i < p.members.size(); ++i) {
    const int k = p.members[i];
    if (!m.matched(k)) continue;
    for (std::size_t j = i + 1; j < p.members.size(); ++j) {
      const int k2 = p.members[j];
      if (!m.matched(k2)) continue;
      trial.swap(k, k2);
      const double after = latency ? bottleneck_latency(p, trial) : cluster_sum_rate(p, trial);
      trial.swap(k, k2);
      const bool better = latency ? strictly_less(after, before) : strictly_less(-after, -before);
      if (better) return std::make_pair(k, k2);
    }
  }
  return std::nullopt;
}

SwapResult swap_matching(const ClusterProblem& p, const MatchingConfig& cfg, SwapCriterion criterion,
                         const MatchingTrace& trace) {
  SwapResult result{Matching(p.num_vues(), p.num_rbs), 0, {}, {}};
  if (p.members.empty()) return result;
  const auto prefs = build_preferences(p);
  result.matching = deferred_acceptance(p.members, p.num_vues(), p.num_rbs, prefs, cfg.rule, trace);
  result.latency_trace.push_back(bottleneck_latency(p, result.matching));
  while (result.iterations < cfg.max_swaps) {
    const auto pair = find_improving_swap(p, result.matching, criterion);
    if (!pair) break;
    const double before = result.latency_trace.back();
    result.matching.swap(pair->first, pair->second);
    ++result.iterations;
    result.latency_trace.push_back(bottleneck_latency(p, result.matching));
    trace.swap(result.iterations, pair->first, pair->second, before, result.latency_trace.back());
  }
  for (int k : p.members)
    if (!result.matching.matched(k)) result.unmatched.push_back(k);
  return result;
}

long long assignment_count(int members, int rbs) {
  if (members > rbs) return 0;
  long long count = 1;
  for (int i = 0; i < members; ++i) count *= rbs - i;
  return count;
}

Matching exhaustive_rb_search(const ClusterProblem& p, int cap) {
  const int k_count = static_cast<int>(p.members.size());
  if (k_count > cap || p.num_rbs > cap) throw OracleTooLargeError("exhaustive RB search above cap");
  if (k_count > p.num_rbs) throw std::invalid_argument("exhaustive RB search needs at least as many RBs as VUEs");
  Matching current(p.num_vues(), p.num_rbs);
  Matching best = current;
  double best_latency = kInf;
  bool found = false;
  auto recurse = [&](auto&& self, int i) -> void {
    if (i == k_count) {
      const double lat = bottleneck_latency(p, current);
      if (!found || lat < best_latency) {
        best_latency = lat;
        best = current;
        found = true;
      }
      return;
    }
    for (int s = 0; s < p.num_rbs; ++s) {
      if (current.vue_of(s) >= 0) continue;
      current.pair(p.members[i], s);
      self(self, i + 1);
      current.unpair_vue(p.members[i]);
    }
  };
  recurse(recurse, 0);
  return best;
}

}  // namespace fogperc
