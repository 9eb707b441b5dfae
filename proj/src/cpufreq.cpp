#include "fogperc/cpufreq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fogperc/error.hpp"

namespace fogperc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

FreqProblem FreqProblem::uncapped(std::vector<double> loads, double budget) {
  std::vector<double> caps(loads.size(), kInf);
  return {std::move(loads), budget, std::move(caps)};
}

void FreqProblem::validate() const {
  if (caps.size() != loads.size()) throw ShapeError("one latency cap per load");
  if (!(budget > 0.0)) throw std::invalid_argument("frequency budget must be > 0");
  for (double c : loads)
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("loads must be finite and >= 0");
  for (double cap : caps)
    if (!(cap > 0.0)) throw std::invalid_argument("latency caps must be > 0");
}

FreqSolution allocate_frequencies(const FreqProblem& problem) {
  problem.validate();
  const std::size_t n = problem.loads.size();
  FreqSolution sol{std::vector<double>(n, 0.0), std::vector<bool>(n, false), true};

  std::vector<double> floor(n, 0.0);
  double required = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (problem.loads[k] > 0.0 && std::isfinite(problem.caps[k])) floor[k] = problem.loads[k] / problem.caps[k];
    required += floor[k];
  }
  if (required > problem.budget * (1.0 + 1e-12)) {
    sol.f = floor;
    for (std::size_t k = 0; k < n; ++k) sol.pinned[k] = floor[k] > 0.0;
    sol.feasible = false;
    return sol;
  }

  // Iterative pinning: pinning shrinks the budget left for the free set,
  // which can only push more VUEs below their floor, so at most n rounds.
  for (std::size_t round = 0; round <= n; ++round) {
    double remaining = problem.budget;
    double sqrt_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (sol.pinned[k]) remaining -= floor[k];
      else if (problem.loads[k] > 0.0) sqrt_sum += std::sqrt(problem.loads[k]);
    }
    bool changed = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (sol.pinned[k]) {
        sol.f[k] = floor[k];
        continue;
      }
      sol.f[k] = problem.loads[k] > 0.0 ? std::max(0.0, remaining) * std::sqrt(problem.loads[k]) / sqrt_sum : 0.0;
      if (problem.loads[k] > 0.0 && sol.f[k] < floor[k]) {
        sol.pinned[k] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return sol;
}

double stationarity_residual(const FreqProblem& problem, const FreqSolution& solution) {
  double lambda = 0.0;
  int free = 0;
  for (std::size_t k = 0; k < problem.loads.size(); ++k) {
    if (problem.loads[k] == 0.0 || solution.pinned[k]) continue;
    lambda += problem.loads[k] / (solution.f[k] * solution.f[k]);
    ++free;
  }
  if (free == 0) return 0.0;
  lambda /= free;
  double residual = 0.0;
  for (std::size_t k = 0; k < problem.loads.size(); ++k) {
    if (problem.loads[k] == 0.0) continue;
    const double g = problem.loads[k] / (solution.f[k] * solution.f[k]);
    const double r = solution.pinned[k] ? std::max(0.0, g - lambda) : std::abs(g - lambda);
    residual = std::max(residual, r / lambda);
  }
  return residual;
}

double computation_objective(const FreqProblem& problem, const std::vector<double>& f) {
  double total = 0.0;
  for (std::size_t k = 0; k < problem.loads.size(); ++k) {
    if (problem.loads[k] == 0.0) continue;
    if (!(f[k] > 0.0)) return kInf;
    total += problem.loads[k] / f[k];
  }
  return total;
}

std::vector<double> grid_search_oracle(const FreqProblem& problem, double resolution) {
  problem.validate();
  const std::size_t n = problem.loads.size();
  if (n > 4) throw OracleTooLargeError("grid search oracle handles at most 4 VUEs");
  if (!(resolution > 0.0 && resolution <= 1.0)) throw std::invalid_argument("resolution must lie in (0, 1]");
  if (n == 1) return {problem.budget};

  const long units = std::lround(1.0 / resolution);
  const double step = problem.budget / static_cast<double>(units);
  std::vector<long> idx(n, 0);
  std::vector<double> f(n), best;
  double best_obj = kInf;

  auto feasible = [&](const std::vector<double>& cand) {
    for (std::size_t k = 0; k < n; ++k)
      if (problem.loads[k] > 0.0 && problem.loads[k] > problem.caps[k] * cand[k] * (1.0 + 1e-12)) return false;
    return true;
  };
  // Enumerate compositions of `units` into n non-negative parts.
  auto recurse = [&](auto&& self, std::size_t pos, long left) -> void {
    if (pos + 1 == n) {
      idx[pos] = left;
      for (std::size_t k = 0; k < n; ++k) f[k] = static_cast<double>(idx[k]) * step;
      if (!feasible(f)) return;
      const double obj = computation_objective(problem, f);
      if (obj < best_obj) {
        best_obj = obj;
        best = f;
      }
      return;
    }
    for (long i = 0; i <= left; ++i) {
      idx[pos] = i;
      self(self, pos + 1, left - i);
    }
  };
  recurse(recurse, 0, units);
  if (best.empty()) throw std::runtime_error("no feasible grid point");
  return best;
}

std::optional<std::vector<double>> nearest_grid_point(const FreqProblem& problem, const std::vector<double>& f,
                                                      double resolution) {
  problem.validate();
  const std::size_t n = problem.loads.size();
  if (f.size() != n) throw ShapeError("one frequency per load");
  const long units = std::lround(1.0 / resolution);
  const double step = problem.budget / static_cast<double>(units);

  std::vector<long> lb(n, 0), g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double c = problem.loads[k];
    if (c <= 0.0) continue;
    lb[k] = 1;
    if (std::isfinite(problem.caps[k])) {
      lb[k] = std::max(1L, static_cast<long>(std::ceil(c / (problem.caps[k] * step))) - 1);
      while (c > problem.caps[k] * static_cast<double>(lb[k]) * step * (1.0 + 1e-12)) ++lb[k];
    }
  }
  long used = 0;
  for (std::size_t k = 0; k < n; ++k) {
    g[k] = std::max(static_cast<long>(std::floor(f[k] / step)), lb[k]);
    used += g[k];
  }
  auto residual = [&](std::size_t k) { return f[k] - static_cast<double>(g[k]) * step; };
  while (used < units) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (residual(k) > residual(best)) best = k;
    ++g[best];
    ++used;
  }
  while (used > units) {
    std::size_t best = n;
    for (std::size_t k = 0; k < n; ++k)
      if (g[k] > lb[k] && (best == n || residual(k) < residual(best))) best = k;
    if (best == n) return std::nullopt;
    --g[best];
    --used;
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = static_cast<double>(g[k]) * step;
    if (std::abs(out[k] - f[k]) > step * (1.0 + 1e-9)) return std::nullopt;
  }
  return out;
}

}  // namespace fogperc
