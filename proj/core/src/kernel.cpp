#include "fracdiff/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/parallel.hpp"

namespace fracdiff {
namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;
constexpr double kQuadTol = 1e-15;

// The rotated integrand stays exponentially damped only while theta * phi < pi/2.
double max_rotation(double theta) {
  return std::min(kPi / 2.0, 0.98 * kPi / (2.0 * theta));
}

boost::math::quadrature::exp_sinh<double>& outer_integrator() {
  thread_local boost::math::quadrature::exp_sinh<double> integrator(12);
  return integrator;
}

boost::math::quadrature::exp_sinh<double>& inner_integrator() {
  thread_local boost::math::quadrature::exp_sinh<double> integrator(12);
  return integrator;
}

// (1/pi) Re[ i^alpha (-1)^m int_0^inf rho^{alpha + theta m} e^{-rho^theta} e^{i z rho} d rho ], z >= 0,
// evaluated on the ray rho = r e^{i phi}.
double profile_1d(double theta, int alpha, int m, double z,
                  boost::math::quadrature::exp_sinh<double>& integrator) {
  if (!std::isfinite(z)) return 0.0;
  const double phi = max_rotation(theta) * z / (z + 1.0);
  const cplx ray = std::polar(1.0, phi);
  cplx prefactor = ray * ((m % 2 != 0) ? -1.0 : 1.0);
  switch (alpha % 4) {
    case 1: prefactor *= cplx(0.0, 1.0); break;
    case 2: prefactor *= -1.0; break;
    case 3: prefactor *= cplx(0.0, -1.0); break;
    default: break;
  }
  const double power = static_cast<double>(alpha) + theta * m;
  auto integrand = [&](double r) -> double {
    if (!(r > 0.0)) return (alpha == 0 && m == 0) ? prefactor.real() : 0.0;
    const cplx log_w(std::log(r), phi);
    const cplx w_theta = std::exp(theta * log_w);
    const cplx e = std::exp(power * log_w - w_theta + cplx(0.0, z * r) * ray);
    return (prefactor * e).real();
  };
  double error = 0.0;
  const double value = integrator.integrate(integrand, kQuadTol, &error);
  return value / kPi;
}

// 2-D radial profile from the 1-D derivative profile:
//   P2(r) = -(1/pi) int_0^inf P1'(r cosh s) ds.
double profile_2d(double theta, int m, double r) {
  if (r == 0.0) {
    const double sign = (m % 2 != 0) ? -1.0 : 1.0;
    return sign * std::tgamma((2.0 + theta * m) / theta) / (2.0 * kPi * theta);
  }
  auto integrand = [&](double s) -> double {
    const double z = r * std::cosh(s);
    if (!std::isfinite(z) || z > 1e150) return 0.0;
    return profile_1d(theta, 1, m, z, inner_integrator());
  };
  double error = 0.0;
  const double value = outer_integrator().integrate(integrand, 1e-13, &error);
  return -value / kPi;
}

void validate_key(const ProfileKey& key) {
  if (!(key.theta > 0.0) || key.theta > 2.0)
    throw ConfigError("theta must lie in (0, 2]");
  if (key.dim != 1 && key.dim != 2) throw ConfigError("dimension must be 1 or 2");
  if (key.alpha < 0 || key.m < 0) throw ConfigError("derivative orders must be nonnegative");
  if (key.dim == 2 && key.alpha != 0)
    throw ConfigError("2-D profiles are radial: spatial derivative order must be 0");
  if (!(key.grid.z_max > 0.0) || !(key.grid.spacing > 0.0) || !(key.grid.z_scale > 0.0))
    throw ConfigError("profile grid parameters must be positive");
}

}  // namespace

std::string ProfileKey::to_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "theta=" << theta << ";dim=" << dim << ";alpha=" << alpha << ";m=" << m
     << ";zmax=" << grid.z_max << ";h=" << grid.spacing << ";zs=" << grid.z_scale;
  return os.str();
}

KernelProfile::KernelProfile(ProfileKey key, std::vector<double> values, double tail_coefficient)
    : key_(key), values_(std::move(values)), tail_coefficient_(tail_coefficient) {
  validate_key(key_);
  if (values_.size() < 16) throw ConfigError("profile needs at least 16 nodes");
  u_max_ = std::asinh(key_.grid.z_max / key_.grid.z_scale);
  du_ = u_max_ / static_cast<double>(values_.size() - 1);
}

double KernelProfile::tail_exponent() const noexcept {
  return key_.dim + key_.theta * std::max(key_.m, 1) + key_.alpha;
}

std::vector<double> KernelProfile::z_nodes() const {
  std::vector<double> z(values_.size());
  for (std::size_t k = 0; k < z.size(); ++k)
    z[k] = key_.grid.z_scale * std::sinh(du_ * static_cast<double>(k));
  z.back() = key_.grid.z_max;
  return z;
}

double KernelProfile::interpolate(double u) const {
  constexpr int kStencil = 8;
  static constexpr double kWeights[kStencil] = {1, -7, 21, -35, 35, -21, 7, -1};
  const long n = static_cast<long>(values_.size());
  const double s = u / du_;
  long first = static_cast<long>(std::floor(s)) - kStencil / 2 + 1;
  first = std::min(first, n - kStencil);
  const double parity = (key_.alpha % 2 != 0) ? -1.0 : 1.0;
  auto node_value = [&](long k) { return k >= 0 ? values_[k] : parity * values_[-k]; };

  double num = 0.0;
  double den = 0.0;
  for (int j = 0; j < kStencil; ++j) {
    const double d = s - static_cast<double>(first + j);
    if (d == 0.0) return node_value(first + j);
    const double w = kWeights[j] / d;
    num += w * node_value(first + j);
    den += w;
  }
  return num / den;
}

double KernelProfile::profile(double z) const {
  const double parity = (key_.alpha % 2 != 0 && z < 0.0) ? -1.0 : 1.0;
  const double r = std::abs(z);
  if (r <= key_.grid.z_max)
    return parity * interpolate(std::asinh(r / key_.grid.z_scale));
  return parity * tail_coefficient_ * std::pow(r, -tail_exponent());
}

double KernelProfile::operator()(double x, double t) const {
  if (!(t > 0.0)) throw ConfigError("kernel evaluation needs t > 0");
  const double theta = key_.theta;
  const double scale = std::pow(t, -1.0 / theta);
  const double value = profile(x * scale);
  const double amplitude = std::pow(scale, key_.dim + key_.alpha) * std::pow(t, -key_.m);
  const double out = amplitude * value;
  if (std::isnan(out)) throw NumericalError("kernel evaluation produced NaN");
  return out;
}

double KernelProfile::mass() const {
  // Trapezoid in u; the integrand is even about u = 0, so only the far end
  // needs an Euler-Maclaurin correction.
  const std::size_t n = values_.size();
  const double zs = key_.grid.z_scale;
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = du_ * static_cast<double>(k);
    const double z = zs * std::sinh(u);
    const double jacobian = zs * std::cosh(u);
    const double measure = key_.dim == 1 ? 2.0 : 2.0 * std::numbers::pi * z;
    g[k] = values_[k] * jacobian * measure;
  }
  double sum = 0.5 * (g.front() + g.back());
  for (std::size_t k = 1; k + 1 < n; ++k) sum += g[k];
  sum *= du_;
  const double slope_end = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * du_);
  sum -= du_ * du_ / 12.0 * slope_end;

  const double a = tail_exponent();
  const double zmax = key_.grid.z_max;
  const double tail = key_.dim == 1
                          ? 2.0 * tail_coefficient_ * std::pow(zmax, 1.0 - a) / (a - 1.0)
                          : 2.0 * std::numbers::pi * tail_coefficient_ *
                                std::pow(zmax, 2.0 - a) / (a - 2.0);
  return sum + tail;
}

double profile_by_quadrature(double theta, int dim, int alpha, int m, double z) {
  validate_key(ProfileKey{theta, dim, alpha, m, {}});
  if (dim == 2) return profile_2d(theta, m, std::abs(z));
  const double parity = (alpha % 2 != 0 && z < 0.0) ? -1.0 : 1.0;
  return parity * profile_1d(theta, alpha, m, std::abs(z), outer_integrator());
}

KernelProfile tabulate_profile(const ProfileKey& key) {
  validate_key(key);
  const double u_max = std::asinh(key.grid.z_max / key.grid.z_scale);
  const double du_target = key.grid.spacing / key.grid.z_scale;
  const auto n = static_cast<std::size_t>(std::ceil(u_max / du_target)) + 1;
  const double du = u_max / static_cast<double>(n - 1);

  std::vector<double> values(n);
  parallel_for(0, n, [&](std::size_t k) {
    const double z = (k + 1 == n) ? key.grid.z_max
                                  : key.grid.z_scale * std::sinh(du * static_cast<double>(k));
    values[k] = profile_by_quadrature(key.theta, key.dim, key.alpha, key.m, z);
  });
  for (double v : values)
    if (!std::isfinite(v)) throw NumericalError("non-finite profile sample: " + key.to_string());

  // Power-law tail with the exponent fixed by the kernel's decay; only the
  // constant is fitted, on the last decade of the grid.
  const double a = key.dim + key.theta * std::max(key.m, 1) + key.alpha;
  double log_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double z = key.grid.z_scale * std::sinh(du * static_cast<double>(k));
    if (z < key.grid.z_max / 10.0 || values[k] == 0.0) continue;
    log_sum += std::log(std::abs(values[k])) + a * std::log(z);
    ++used;
  }
  double tail = 0.0;
  if (used > 0 && values.back() != 0.0)
    tail = std::copysign(std::exp(log_sum / static_cast<double>(used)), values.back());
  if (!std::isfinite(tail)) throw NumericalError("tail fit failed: " + key.to_string());

  KernelProfile profile(key, std::move(values), tail);

  if (key.alpha == 0 && key.m == 0) {
    const auto p = profile.values();
    const double peak = p.front();
    if (!(peak > 0.0)) throw NumericalError("kernel profile is not positive at the origin");
    for (std::size_t k = 1; k < p.size(); ++k) {
      if (p[k] < -1e-13 * peak)
        throw NumericalError("negative kernel sample in " + key.to_string());
      if (p[k] > p[k - 1] + 1e-13 * peak)
        throw NumericalError("kernel profile is not radially decreasing in " + key.to_string());
    }
    const double mass = profile.mass();
    if (std::abs(mass - 1.0) > 1e-3)
      throw NumericalError("kernel mass " + std::to_string(mass) + " differs from 1 in " +
                           key.to_string());
  }
  return profile;
}

double eval_kernel_derivative(const KernelProfile& profile, double x, double t) {
  return profile(x, t);
}

double closed_form_oracle(double theta, int dim, double x, double t) {
  if (!(t > 0.0)) throw ConfigError("closed-form kernel needs t > 0");
  if (dim != 1 && dim != 2) throw ConfigError("dimension must be 1 or 2");
  const double r2 = x * x;
  if (theta == 1.0) {
    const double d = t * t + r2;
    return dim == 1 ? t / (kPi * d) : t / (2.0 * kPi * d * std::sqrt(d));
  }
  if (theta == 2.0) {
    const double g = std::exp(-r2 / (4.0 * t));
    return dim == 1 ? g / std::sqrt(4.0 * kPi * t) : g / (4.0 * kPi * t);
  }
  throw ConfigError("closed forms exist only for theta = 1 and theta = 2");
}

namespace {

// Repeated integration by parts at s = pi: with g(s) = exp(-c s^theta),
//   integral_pi^inf g(s) cos(k s) ds = (-1)^k sum_{j>=1} (-1)^j g^{(2j-1)}(pi) / k^{2j}.
// Returns NaN when the series does not settle.
double band_tail_asymptotic(double theta, double c, double k) {
  constexpr int kTerms = 48;
  // Taylor coefficients of phi(pi + e) = c (pi + e)^theta and g = exp(-phi).
  double a[kTerms + 1], b[kTerms + 1];
  double binom = 1.0;
  const double a0 = c * std::pow(kPi, theta);
  for (int n = 0; n <= kTerms; ++n) {
    a[n] = a0 * binom * std::pow(kPi, -n);
    binom *= (theta - n) / (n + 1.0);
  }
  b[0] = std::exp(-a0);
  for (int n = 1; n <= kTerms; ++n) {
    double s = 0.0;
    for (int j = 1; j <= n; ++j) s += j * a[j] * b[n - j];
    b[n] = -s / n;
  }
  double sum = 0.0, factorial = 1.0, kpow = k * k, previous = std::numeric_limits<double>::infinity();
  for (int j = 1; 2 * j - 1 <= kTerms; ++j) {
    if (j > 1) factorial *= (2.0 * j - 2.0) * (2.0 * j - 1.0);
    const double term = ((j % 2) ? -1.0 : 1.0) * factorial * b[2 * j - 1] / kpow;
    if (std::abs(term) > previous) return std::numeric_limits<double>::quiet_NaN();
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) return sum;
    previous = std::abs(term);
    kpow *= k * k;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double band_tail_integral(double theta, double c, long k) {
  if (!(theta > 0.0) || theta > 2.0) throw ConfigError("theta must lie in (0, 2]");
  if (!(c >= 0.0)) throw ConfigError("band tail needs c >= 0");
  const double kk = std::abs(static_cast<double>(k));
  const double sign = (k % 2 != 0) ? -1.0 : 1.0;
  if (kk >= 32.0 && c > 0.0) {
    const double v = band_tail_asymptotic(theta, c, kk);
    if (std::isfinite(v)) return sign * v / kPi;
  }
  const double rate = c * theta * std::pow(kPi, theta - 1.0);
  const double phi = max_rotation(theta) * kk / (kk + 1.0 + rate);
  const cplx ray = std::polar(1.0, phi);
  auto integrand = [&](double r) -> double {
    const cplx w = r * ray;
    const cplx e = std::exp(-c * std::pow(cplx(kPi) + w, theta) + cplx(0.0, kk * r) * ray);
    return (ray * e).real();
  };
  double error = 0.0;
  const double value = outer_integrator().integrate(integrand, kQuadTol, &error);
  return sign * value / kPi;
}

}  // namespace fracdiff
