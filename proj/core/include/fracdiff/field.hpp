#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace fracdiff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uniform grid on [-half_width, half_width] with `size` nodes.
struct Grid {
  double half_width = 1.0;
  std::size_t size = 3;

  Grid() = default;
  Grid(double half_width, std::size_t size);
  /// Grid with the given spacing and at least the given extent.
  static Grid with_spacing(double half_width, double spacing);

  double spacing() const noexcept { return 2.0 * half_width / static_cast<double>(size - 1); }
  double x(std::size_t i) const noexcept {
    return -half_width + static_cast<double>(i) * spacing();
  }
  std::vector<double> nodes() const;

  bool operator==(const Grid&) const = default;
};

/// Real samples of a function of one space variable.
///
/// `support_radius`, when set, asserts the function vanishes for |x| beyond it.
/// `tail_exponent`, when set, asserts |f(x)| ~ C |x|^{-tail_exponent} outside
/// the grid; both feed the truncated-tail bounds of norms and moments.
class Field {
 public:
  Field() = default;
  Field(Grid grid, std::vector<double> values);
  static Field sample(const Grid& grid, const std::function<double(double)>& f);
  static Field zeros(const Grid& grid);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::optional<double> support_radius;
  std::optional<double> tail_exponent;

  /// Local 8-point interpolation; zero outside the grid unless a tail exponent
  /// is set, in which case the edge value is continued as a power law.
  double interpolate(double x) const;
  /// Resamples onto another grid with interpolate().
  Field resample(const Grid& target) const;

  double max_abs() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s);

 private:
  Grid grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Field a, double s);
Field operator*(double s, Field a);

/// Weighted L^q norm |||f|||_{q,ell} = || |x|^ell f ||_q, optionally combined
/// into ||f||_{L^q_K} = ||f||_q + |||f|||_{q,K} by the caller.
struct WeightSpec {
  double q = 1.0;
  double ell = 0.0;
  double K = 0.0;
};

/// Value of a truncated quadrature together with a bound on what the
/// truncation to the grid left out.
struct Estimate {
  double value = 0.0;
  double tail_bound = 0.0;
};

double weighted_norm(const Field& f, const WeightSpec& spec);
Estimate weighted_norm_estimate(const Field& f, const WeightSpec& spec);

/// M_alpha(f) = integral of x^alpha f(x) dx. With a tail exponent set, the
/// power-law continuation beyond the grid is included when it converges.
/// Emits a warning when the truncated tail may exceed 1% of the result.
double moment(const Field& f, int alpha);
Estimate moment_estimate(const Field& f, int alpha);

/// The forcing functional E_{K,q}[f](t) evaluated on one time slice.
double e_functional(const Field& f_slice, double K, double q, double theta, int dim, double t);

/// Time-indexed family of fields; slices may live on different grids
/// (growing boxes), time interpolation is piecewise linear.
class SpaceTimeField {
 public:
  SpaceTimeField() = default;
  SpaceTimeField(std::vector<double> times, std::vector<Field> slices);

  void push_back(double t, Field slice);

  std::span<const double> times() const noexcept { return times_; }
  const std::vector<Field>& slices() const noexcept { return slices_; }
  const Field& slice(std::size_t i) const { return slices_.at(i); }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }

  /// Slice at time t on the target grid (piecewise linear in time).
  Field at(double t, const Grid& target) const;

 private:
  std::vector<double> times_;
  std::vector<Field> slices_;
};

/// integral_0^t (s+1)^m M_alpha(f(s)) ds over the trajectory's samples.
/// t = kInf integrates over the whole sampled range. Warns when halving the
/// time resolution changes the result by more than 1%.
double time_weighted_moment_integral(const SpaceTimeField& f, int alpha, int m, double t);

/// Same, for precomputed moment samples M_alpha(f(s_k)).
double time_weighted_moment_integral(std::span<const double> times,
                                     std::span<const double> moments, int m, double t);

// On-disk formats.
void write_field_csv(const Field& f, const std::filesystem::path& path);
Field read_field_csv(const std::filesystem::path& path);
void write_field_binary(const Field& f, const std::filesystem::path& path);
Field read_field_binary(const std::filesystem::path& path);
void write_trajectory(const SpaceTimeField& f, const std::filesystem::path& dir);
SpaceTimeField read_trajectory(const std::filesystem::path& dir);

}  // namespace fracdiff
