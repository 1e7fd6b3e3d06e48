#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "entail/params.hpp"

namespace entail {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  size_t coords_checked = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Central-difference check of analytic gradients: perturbs every coordinate of
// every view by ±h, re-evaluates the loss, and compares against `analytic`.
// Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
// `loss_fn` must be deterministic (no live dropout) or the numbers are
// meaningless. The quotient is formed in extended precision against the step
// that was actually applied, so the reference side stays below the error
// floor being asserted.
template <typename T>
GradCheckReport grad_check(std::span<ParamRef<T>> views,
                           const std::function<long double()>& loss_fn,
                           const NamedGrads<T>& analytic, double h = 1e-5) {
  GradCheckReport report;
  for (const auto& view : views) {
    const Mat<T>* grad = analytic.find(view.name);
    for (size_t i = 0; i < view.size; ++i) {
      const T saved = view.data[i];
      view.data[i] = saved + static_cast<T>(h);
      const T applied_plus = view.data[i];
      const long double plus = loss_fn();
      view.data[i] = saved - static_cast<T>(h);
      const T applied_minus = view.data[i];
      const long double minus = loss_fn();
      view.data[i] = saved;
      const long double step = static_cast<long double>(applied_plus) -
                               static_cast<long double>(applied_minus);
      const double numeric = static_cast<double>((plus - minus) / step);
      const double analytic_v = grad ? static_cast<double>(grad->data[i]) : 0.0;
      const double denom = std::max({std::abs(analytic_v), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic_v - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = view.name;
        report.worst_index = i;
        report.worst_analytic = analytic_v;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace entail
