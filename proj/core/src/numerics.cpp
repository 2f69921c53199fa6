#include "fracdiff/numerics.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <mutex>
#include <numbers>

#include "fracdiff/errors.hpp"

namespace fracdiff {
namespace {

GaussRule make_rule(int points) {
  // Newton iteration on P_n from the Chebyshev-like initial guess.
  GaussRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  for (int i = 0; i < points; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= points; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = points * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

std::mutex g_warn_mutex;
WarningHandler g_warn_handler;

}  // namespace

const GaussRule& gauss_legendre_unit(int points) {
  static std::mutex mutex;
  static std::map<int, GaussRule> rules;
  if (points < 1) throw ConfigError("Gauss rule needs at least one node");
  std::lock_guard lock(mutex);
  auto it = rules.find(points);
  if (it == rules.end()) it = rules.emplace(points, make_rule(points)).first;
  return it->second;
}

namespace {
// Integral over [a, b] of the quadratic through (t0,y0), (t1,y1), (t2,y2).
double quadratic_segment(double t0, double t1, double t2, double y0, double y1, double y2,
                         double a, double b) {
  auto antiderivative = [&](double s) {
    // Lagrange basis integrated: use the shifted variable s - t0.
    const double d01 = t0 - t1, d02 = t0 - t2, d12 = t1 - t2;
    auto basis = [&](double ta, double tb, double denom) {
      // integral of (s - ta)(s - tb) / denom
      return (s * s * s / 3.0 - (ta + tb) * s * s / 2.0 + ta * tb * s) / denom;
    };
    return y0 * basis(t1, t2, d01 * d02) + y1 * basis(t0, t2, -d01 * d12) +
           y2 * basis(t0, t1, d02 * d12);
  };
  return antiderivative(b) - antiderivative(a);
}
}  // namespace

std::vector<double> cumulative_integral(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw ConfigError("sample arrays differ in length");
  const std::size_t n = t.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) return out;
  if (n == 2) {
    out[1] = 0.5 * (t[1] - t[0]) * (y[0] + y[1]);
    return out;
  }
  auto segment = [&](std::size_t j, std::size_t k) {
    return quadratic_segment(t[j], t[j + 1], t[j + 2], y[j], y[j + 1], y[j + 2], t[k - 1], t[k]);
  };
  for (std::size_t k = 1; k < n; ++k) {
    // Interior intervals average the quadratics through the left and right neighbours.
    double seg;
    if (k == 1) seg = segment(0, k);
    else if (k + 1 == n) seg = segment(k - 2, k);
    else seg = 0.5 * (segment(k - 2, k) + segment(k - 1, k));
    out[k] = out[k - 1] + seg;
  }
  return out;
}

double integrate_samples(std::span<const double> t, std::span<const double> y) {
  const auto c = cumulative_integral(t, y);
  return c.empty() ? 0.0 : c.back();
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("line fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("line fit needs distinct abscissae");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warn_mutex);
  g_warn_handler = std::move(handler);
}

void warn(const std::string& message) {
  std::lock_guard lock(g_warn_mutex);
  if (g_warn_handler)
    g_warn_handler(message);
  else
    std::cerr << "fracdiff warning: " << message << '\n';
}

}  // namespace fracdiff
