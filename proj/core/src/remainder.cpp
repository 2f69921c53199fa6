#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracdiff/errors.hpp"
#include "fracdiff/expansion.hpp"
#include "fracdiff/kernel_cache.hpp"
#include "fracdiff/numerics.hpp"

namespace fracdiff {

namespace {

constexpr int kTaylorNodes = 32;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// d_t^m d_x^alpha G_theta(x, t).
double dG(double theta, int alpha, int m, double x, double t) {
  return (*KernelLibrary::shared().get(theta, alpha, m))(x, t);
}

double S_difference(double theta, int order, int m, double x, double y, double t) {
  double v = dG(theta, 0, m, x - y, t);
  for (int a = 0; a <= order; ++a)
    v -= ((a % 2) ? -1.0 : 1.0) / factorial(a) * dG(theta, a, m, x, t) * std::pow(y, a);
  return v;
}

// (1/n!) int_0^1 (1-tau)^n (-y)^{n+1} d_x^{n+1} d_t^m G(x - tau y, t) dtau, n = order.
double S_integral(double theta, int order, int m, double x, double y, double t) {
  if (y == 0.0) return 0.0;
  const auto& rule = gauss_legendre_unit(kTaylorNodes);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double tau = rule.nodes[i];
    sum += rule.weights[i] * std::pow(1.0 - tau, order) * dG(theta, order + 1, m, x - tau * y, t);
  }
  return sum * std::pow(-y, order + 1) / factorial(order);
}

double T_difference(double theta, int Kt, double x, double y, double t, double s) {
  double v = dG(theta, 0, 0, x - y, t - s);
  for (int m = 0; m <= Kt; ++m)
    v -= ((m % 2) ? -1.0 : 1.0) / factorial(m) * dG(theta, 0, m, x - y, t) * std::pow(s, m);
  return v;
}

double T_integral(double theta, int Kt, double x, double y, double t, double s) {
  if (s == 0.0) return 0.0;
  const auto& rule = gauss_legendre_unit(kTaylorNodes);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double tau = rule.nodes[i];
    sum += rule.weights[i] * std::pow(1.0 - tau, Kt) * dG(theta, 0, Kt + 1, x - y, t - tau * s);
  }
  return sum * std::pow(-s, Kt + 1) / factorial(Kt);
}

}  // namespace

double RemainderValues::max_disagreement() const {
  return std::max({std::abs(S - S_integral), std::abs(T - T_integral), std::abs(R - R_composed)});
}

RemainderValues remainder_kernels(double x, double y, double t, double s, double ell, int m,
                                  const ExpansionSpec& spec, double tolerance) {
  spec.validate();
  if (!(s >= 0.0 && s < t)) throw ConfigError("remainder kernels need 0 <= s < t");
  if (!(ell >= 0.0 && ell <= spec.K)) throw ConfigError("remainder kernels need 0 <= ell <= K");
  if (m < 0) throw ConfigError("time derivative order must be >= 0");
  const double theta = spec.theta;
  const int order = floor_index(ell);
  const int K = spec.max_alpha();
  const int Kt = spec.K_theta();

  RemainderValues r;
  r.S = S_difference(theta, order, m, x, y, t);
  r.S_integral = S_integral(theta, order, m, x, y, t);
  r.T = T_difference(theta, Kt, x, y, t, s);
  r.T_integral = T_integral(theta, Kt, x, y, t, s);

  r.R = dG(theta, 0, 0, x - y, t - s);
  for (int j = 0; j <= Kt; ++j)
    for (int a = 0; a <= K; ++a)
      r.R -= (((a + j) % 2) ? -1.0 : 1.0) / (factorial(a) * factorial(j)) * dG(theta, a, j, x, t) *
             std::pow(y, a) * std::pow(s, j);
  r.R_composed = r.T_integral;
  for (int j = 0; j <= Kt; ++j)
    r.R_composed += ((j % 2) ? -1.0 : 1.0) / factorial(j) * S_integral(theta, K, j, x, y, t) *
                    std::pow(s, j);

  if (!(r.max_disagreement() <= tolerance)) {
    std::ostringstream os;
    os << "remainder kernel forms disagree by " << r.max_disagreement() << " at (x, y, t, s) = ("
       << x << ", " << y << ", " << t << ", " << s << ")";
    throw NumericalError(os.str());
  }
  return r;
}

}  // namespace fracdiff
