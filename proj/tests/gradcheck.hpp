#pragma once

// Central finite-difference gradient checks shared by the unit and
// acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fogperc/neural.hpp"

namespace fogperc::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  long checked = 0;
};

/// |a - n| / max(|a|, |n|, 1e-6).
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// Compares `analytic` with central differences of `loss` over every entry
/// of `x` (perturbed in place and restored).
inline GradCheck check_entries(Matrix& x, const Matrix& analytic, const std::function<double()>& loss,
                               double h = 1e-5) {
  GradCheck out;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = loss();
    x.data()[i] = saved - h;
    const double down = loss();
    x.data()[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic.data()[i], numeric));
    ++out.checked;
  }
  return out;
}

/// Checks every parameter tensor; `params` must hold the analytic gradients.
inline GradCheck check_params(const std::vector<ParamRef>& params, const std::function<double()>& loss,
                              double h = 1e-5) {
  GradCheck out;
  for (const auto& p : params) {
    const Matrix analytic = *p.grad;
    const GradCheck g = check_entries(*p.value, analytic, loss, h);
    out.max_rel_error = std::max(out.max_rel_error, g.max_rel_error);
    out.checked += g.checked;
  }
  return out;
}

/// Linear probe L = sum(W .* y) used to turn a matrix output into a scalar.
inline double probe(const Matrix& weights, const Matrix& y) { return weights.cwiseProduct(y).sum(); }

}  // namespace fogperc::testing
