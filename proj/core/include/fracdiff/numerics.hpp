#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fracdiff {

/// Gauss-Legendre nodes and weights on [0, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre_unit(int points);

/// Integral of sampled data over [t.front(), t.back()] using piecewise
/// quadratics through consecutive node triples (any spacing).
double integrate_samples(std::span<const double> t, std::span<const double> y);

/// Running integral: out[k] = integral from t[0] to t[k].
std::vector<double> cumulative_integral(std::span<const double> t, std::span<const double> y);

/// Least-squares fit y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Diagnostics sink for non-fatal numerical warnings (stderr by default).
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace fracdiff
