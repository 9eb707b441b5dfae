#pragma once

#include <limits>
#include <optional>
#include <vector>

namespace fogperc {

/// Frequency split at one computing node. loads[k] are CPU cycles, caps[k]
/// the latency each VUE may still spend computing (+inf for none).
struct FreqProblem {
  std::vector<double> loads;
  double budget = 0.0;
  std::vector<double> caps;

  /// Uncapped problem.
  static FreqProblem uncapped(std::vector<double> loads, double budget);
  void validate() const;
};

struct FreqSolution {
  std::vector<double> f;
  std::vector<bool> pinned;  ///< f[k] sits on its cap lower bound c_k / cap_k
  bool feasible = true;      ///< false: f holds the minimal requirement vector instead
};

/// Minimises sum_k c_k / f_k s.t. sum f <= budget and c_k / f_k <= cap_k.
/// Free VUEs share the remaining budget in proportion to sqrt(c_k); VUEs whose
/// cap would be violated are pinned at c_k / cap_k and the rule is re-applied
/// until nothing changes. Zero-load VUEs get 0.
FreqSolution allocate_frequencies(const FreqProblem& problem);

/// sum_k c_k / f_k over positive loads; +inf if a loaded VUE has f_k = 0.
double computation_objective(const FreqProblem& problem, const std::vector<double>& f);

/// KKT residual of a solution: relative spread of c_k / f_k^2 over free
/// loaded VUEs plus any negative cap multiplier on pinned ones. Zero at the
/// optimum.
double stationarity_residual(const FreqProblem& problem, const FreqSolution& solution);

/// Exhaustive search over the simplex grid {f : f_k = i_k * resolution * budget,
/// sum f = budget}, honoring caps. Test oracle for at most four VUEs.
std::vector<double> grid_search_oracle(const FreqProblem& problem, double resolution);

/// Feasible point of the same grid within one grid step of `f` in every
/// coordinate, or nullopt if none exists. Bounds the grid optimum from above.
std::optional<std::vector<double>> nearest_grid_point(const FreqProblem& problem, const std::vector<double>& f,
                                                      double resolution);

}  // namespace fogperc
