#pragma once

// Reference values computed without the library's tables.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline constexpr double pi = std::numbers::pi;

inline double gauss(double x, double t) {
  return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * pi * t);
}

inline double poisson(double x, double t) { return t / (pi * (t * t + x * x)); }

// Physicists' Hermite polynomial H_n.
inline double hermite(int n, double x) {
  double h0 = 1.0, h1 = 2.0 * x;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

// d_t^m d_x^alpha of the heat kernel; d_t = d_x^2 for theta = 2.
inline double gauss_derivative(int alpha, int m, double x, double t) {
  const int n = alpha + 2 * m;
  const double s = std::sqrt(4.0 * t);
  return ((n % 2) ? -1.0 : 1.0) * std::pow(s, -n) * hermite(n, x / s) * gauss(x, t);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        unsigned depth = 25) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, depth, 1e-14);
}

// Integral over [a, b] split into `pieces` equal parts.
inline double integrate_pieces(const std::function<double(double)>& f, double a, double b,
                               int pieces) {
  double sum = 0.0;
  const double h = (b - a) / pieces;
  for (int i = 0; i < pieces; ++i) sum += integrate(f, a + i * h, a + (i + 1) * h, 4);
  return sum;
}

// Unit-time profile of d_x^alpha d_t^m G_theta in one dimension:
// (1/pi) int_0^inf Re[(i rho)^alpha] (-rho^theta)^m e^{-rho^theta} e^{i rho z} d rho,
// with rho = v^2 so the integrand is smooth at the origin for theta in {0.5, 1, 1.5}.
inline double stable_profile(double theta, int alpha, int m, double z) {
  const double v_max = std::pow(60.0, 0.5 / theta);
  auto f = [=](double v) {
    const double rho = v * v;
    const double damp = std::pow(-std::pow(rho, theta), m) * std::exp(-std::pow(rho, theta));
    const double phase = rho * z + alpha * pi / 2.0;
    return 2.0 * v * std::pow(rho, alpha) * damp * std::cos(phase) / pi;
  };
  const int pieces = 16 + static_cast<int>(2.0 * v_max * v_max * std::abs(z) / pi);
  return integrate_pieces(f, 0.0, v_max, pieces);
}

// Integral of f over the real line: equal pieces on [-L, L], exp-sinh on the two tails.
inline double integrate_line(const std::function<double(double)>& f, double L = 2000.0,
                             int pieces = 4000) {
  boost::math::quadrature::exp_sinh<double> tail;
  const double inf = std::numeric_limits<double>::infinity();
  return integrate_pieces(f, -L, L, pieces) +
         tail.integrate([&](double y) { return f(L + y); }, 0.0, inf) +
         tail.integrate([&](double y) { return f(-L - y); }, 0.0, inf);
}

inline double normal(double x, double mu, double s) {
  const double z = (x - mu) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * pi));
}

}  // namespace oracle
