#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fracdiff {

/// Sampling parameters of a tabulated profile.
///
/// Nodes are uniform in the mapped coordinate u = asinh(z / z_scale), so the
/// spacing is `spacing` near the origin and grows proportionally to z in the
/// far field, where the profile is a slowly varying power law.
struct ProfileGrid {
  double z_max = 1.0e4;
  double spacing = 0.008;
  double z_scale = 2.0;

  bool operator==(const ProfileGrid&) const = default;
};

/// Identifies the self-similar profile of d_t^m d_x^alpha G_theta.
///
/// For dim == 2 only radial profiles (alpha == 0) exist; evaluation then takes
/// the radius |x| as its spatial argument.
struct ProfileKey {
  double theta = 1.0;
  int dim = 1;
  int alpha = 0;
  int m = 0;
  ProfileGrid grid{};

  bool operator==(const ProfileKey&) const = default;
  std::string to_string() const;
};

/// Tabulated profile P with
///   d_t^m d_x^alpha G_theta(x, t) = t^{-(N+|alpha|)/theta - m} P(t^{-1/theta} x).
///
/// Immutable after construction; safe to share between threads.
class KernelProfile {
 public:
  KernelProfile(ProfileKey key, std::vector<double> values, double tail_coefficient);

  const ProfileKey& key() const noexcept { return key_; }
  double theta() const noexcept { return key_.theta; }
  int dim() const noexcept { return key_.dim; }
  int alpha() const noexcept { return key_.alpha; }
  int m() const noexcept { return key_.m; }

  /// N + theta * max(m, 1) + |alpha|.
  double tail_exponent() const noexcept;
  /// c in P(z) ~ c z^{-tail_exponent} beyond z_max.
  double tail_coefficient() const noexcept { return tail_coefficient_; }

  std::size_t size() const noexcept { return values_.size(); }
  /// Scaled positions of the nodes (nonnegative half line).
  std::vector<double> z_nodes() const;
  std::span<const double> values() const noexcept { return values_; }

  /// P(z) for any real z: interpolated on the grid, power-law tail beyond it.
  double profile(double z) const;

  /// d_t^m d_x^alpha G_theta(x, t). Throws ConfigError for t <= 0.
  double operator()(double x, double t) const;

  /// Integral of P over R^N, including the analytic contribution of the tail.
  double mass() const;

 private:
  double interpolate(double u) const;

  ProfileKey key_;
  std::vector<double> values_;
  double du_;
  double u_max_;
  double tail_coefficient_;
};

/// Direct evaluation of P(z) by quadrature, without a table.
///
/// 1-D profiles use the Fourier integral along a ray rotated into the upper
/// half plane, which removes the oscillation of e^{i z rho}. 2-D radial
/// profiles use the Abel relation with the 1-D first-derivative profile.
double profile_by_quadrature(double theta, int dim, int alpha, int m, double z);

/// Tabulates P on key.grid. Throws ConfigError for inadmissible parameters
/// and NumericalError if a sampled profile violates the positivity,
/// monotonicity or unit-mass properties expected of G_theta itself.
KernelProfile tabulate_profile(const ProfileKey& key);

/// Convenience: d_t^m d_x^alpha G_theta(x, t) from a table.
double eval_kernel_derivative(const KernelProfile& profile, double x, double t);

/// Closed-form kernel for theta = 1 (Poisson) or theta = 2 (Gauss).
/// For dim == 2 the argument x is the radius.
double closed_form_oracle(double theta, int dim, double x, double t);

/// (1/pi) * integral over [pi, inf) of exp(-c s^theta) cos(k s) ds for integer k.
/// This is the part of the full-line kernel that a grid with spacing h cannot
/// represent, for c = tau / h^theta.
double band_tail_integral(double theta, double c, long k);

}  // namespace fracdiff
