#include "fracdiff/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracdiff/errors.hpp"
#include "fracdiff/numerics.hpp"

namespace fracdiff {

Grid::Grid(double half_width_, std::size_t size_) : half_width(half_width_), size(size_) {
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw ConfigError("grid half width must be positive");
  if (size < 3) throw ConfigError("grid needs at least 3 nodes");
}

Grid Grid::with_spacing(double half_width, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
  const auto cells = static_cast<std::size_t>(std::ceil(2.0 * half_width / spacing - 1e-9));
  const std::size_t even_cells = cells + (cells % 2);
  return Grid(0.5 * spacing * static_cast<double>(even_cells), even_cells + 1);
}

std::vector<double> Grid::nodes() const {
  std::vector<double> x(size);
  for (std::size_t i = 0; i < size; ++i) x[i] = this->x(i);
  return x;
}

Field::Field(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size) throw ConfigError("field size does not match its grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw NumericalError("field values must be finite");
}

Field Field::sample(const Grid& grid, const std::function<double(double)>& f) {
  std::vector<double> v(grid.size);
  for (std::size_t i = 0; i < grid.size; ++i) v[i] = f(grid.x(i));
  return Field(grid, std::move(v));
}

Field Field::zeros(const Grid& grid) { return Field(grid, std::vector<double>(grid.size, 0.0)); }

double Field::interpolate(double x) const {
  const double h = grid_.spacing();
  const double L = grid_.half_width;
  const long n = static_cast<long>(values_.size());
  if (std::abs(x) > L * (1.0 + 1e-14)) {
    if (!tail_exponent) return 0.0;
    const double edge = x > 0.0 ? values_.back() : values_.front();
    return edge * std::pow(L / std::abs(x), *tail_exponent);
  }
  const double s = (x + L) / h;
  constexpr int kStencil = 8;
  static constexpr double kWeights[kStencil] = {1, -7, 21, -35, 35, -21, 7, -1};
  if (n < kStencil) {
    const long i = std::clamp(static_cast<long>(std::floor(s)), 0L, n - 2);
    const double f = s - static_cast<double>(i);
    return (1.0 - f) * values_[i] + f * values_[i + 1];
  }
  long first = static_cast<long>(std::floor(s)) - kStencil / 2 + 1;
  first = std::clamp(first, 0L, n - kStencil);
  double num = 0.0, den = 0.0;
  for (int j = 0; j < kStencil; ++j) {
    const double d = s - static_cast<double>(first + j);
    if (d == 0.0) return values_[first + j];
    const double w = kWeights[j] / d;
    num += w * values_[first + j];
    den += w;
  }
  return num / den;
}

Field Field::resample(const Grid& target) const {
  if (target == grid_) return *this;
  Field out = Field::sample(target, [this](double x) { return interpolate(x); });
  out.support_radius = support_radius;
  out.tail_exponent = tail_exponent;
  return out;
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Field& Field::operator+=(const Field& other) {
  if (!(other.grid_ == grid_)) throw ConfigError("field grids differ");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  if (!(other.grid_ == grid_)) throw ConfigError("field grids differ");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(Field a, double s) { return a *= s; }
Field operator*(double s, Field a) { return a *= s; }

namespace {

double trapezoid_weight(const Grid& g, std::size_t i) {
  const double h = g.spacing();
  return (i == 0 || i + 1 == g.size) ? 0.5 * h : h;
}

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

bool tail_is_zero(const Field& f) {
  return f.support_radius && *f.support_radius <= f.grid().half_width;
}

// Integral over |x| > L of (|x|^power * |edge| * (L/|x|)^a)^q, per side.
double power_tail(double edge, double L, double power, double a, double q) {
  if (edge == 0.0) return 0.0;
  const double decay = q * (a - power);
  if (decay <= 1.0) return kInf;
  return std::pow(std::pow(L, power) * std::abs(edge), q) * L / (decay - 1.0);
}

}  // namespace

Estimate weighted_norm_estimate(const Field& f, const WeightSpec& spec) {
  if (!(spec.q >= 1.0)) throw ConfigError("norm exponent q must be >= 1");
  if (!(spec.ell >= 0.0)) throw ConfigError("weight power must be >= 0");
  const Grid& g = f.grid();
  const auto v = f.values();
  const double L = g.half_width;

  if (std::isinf(spec.q)) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      m = std::max(m, std::pow(std::abs(g.x(i)), spec.ell) * std::abs(v[i]));
    double tail = 0.0;
    if (!tail_is_zero(f)) {
      const double edge = std::max(std::abs(v.front()), std::abs(v.back()));
      const double a = f.tail_exponent.value_or(0.0);
      tail = (a >= spec.ell) ? std::pow(L, spec.ell) * edge : kInf;
      if (edge == 0.0) tail = 0.0;
      tail = std::max(0.0, tail - m);
    }
    return {m, tail};
  }

  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = std::pow(std::abs(g.x(i)), spec.ell) * std::abs(v[i]);
    sum += trapezoid_weight(g, i) * std::pow(w, spec.q);
  }
  const double value = std::pow(sum, 1.0 / spec.q);
  double tail = 0.0;
  if (!tail_is_zero(f)) {
    double extra = 0.0;
    if (f.tail_exponent) {
      extra = power_tail(v.front(), L, spec.ell, *f.tail_exponent, spec.q) +
              power_tail(v.back(), L, spec.ell, *f.tail_exponent, spec.q);
    } else {
      // Unknown decay: assume the edge level persists over one more box width.
      extra = (std::pow(std::pow(L, spec.ell) * std::abs(v.front()), spec.q) +
               std::pow(std::pow(L, spec.ell) * std::abs(v.back()), spec.q)) * L;
    }
    tail = std::isinf(extra) ? kInf : std::pow(sum + extra, 1.0 / spec.q) - value;
  }
  return {value, tail};
}

double weighted_norm(const Field& f, const WeightSpec& spec) {
  return weighted_norm_estimate(f, spec).value;
}

Estimate moment_estimate(const Field& f, int alpha) {
  if (alpha < 0) throw ConfigError("moment order must be nonnegative");
  const Grid& g = f.grid();
  const auto v = f.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    sum += trapezoid_weight(g, i) * ipow(g.x(i), alpha) * v[i];
  double tail = 0.0;
  if (!tail_is_zero(f)) {
    const double L = g.half_width;
    if (f.tail_exponent) {
      const double right = power_tail(v.back(), L, alpha, *f.tail_exponent, 1.0);
      const double left = power_tail(v.front(), L, alpha, *f.tail_exponent, 1.0);
      tail = right + left;
      if (std::isfinite(tail)) {
        // The modeled power-law tail is added; its size doubles as the bound.
        const double sign_right = v.back() < 0.0 ? -1.0 : 1.0;
        const double sign_left = (v.front() < 0.0 ? -1.0 : 1.0) * (alpha % 2 ? -1.0 : 1.0);
        sum += sign_right * right + sign_left * left;
      }
    } else {
      tail = (std::abs(v.front()) + std::abs(v.back())) * std::pow(L, alpha + 1);
    }
  }
  return {sum, tail};
}

double moment(const Field& f, int alpha) {
  const Estimate e = moment_estimate(f, alpha);
  if (e.tail_bound > 0.0) {
    double scale = std::abs(e.value);
    const Grid& g = f.grid();
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
      abs_sum += trapezoid_weight(g, i) * std::pow(std::abs(g.x(i)), alpha) * std::abs(f[i]);
    scale = std::max(scale, abs_sum);
    if (e.tail_bound > 0.01 * scale) {
      std::ostringstream os;
      os << "moment M_" << alpha << ": truncated tail bound " << e.tail_bound
         << " exceeds 1% of " << scale;
      warn(os.str());
    }
  }
  return e.value;
}

double e_functional(const Field& f_slice, double K, double q, double theta, int dim, double t) {
  if (!(t >= 0.0)) throw ConfigError("E functional needs t >= 0");
  if (!(theta > 0.0)) throw ConfigError("theta must be positive");
  if (K < 0.0) throw ConfigError("moment order K must be >= 0");
  const double lq = std::isinf(q) ? 1.0 : 1.0 - 1.0 / q;
  const double tq = std::pow(t, (dim / theta) * lq);
  const double norm_q = weighted_norm(f_slice, {q, 0.0, K});
  const double norm_1 = weighted_norm(f_slice, {1.0, 0.0, K});
  const double wnorm_q = weighted_norm(f_slice, {q, K, K});
  const double wnorm_1 = weighted_norm(f_slice, {1.0, K, K});
  return std::pow(t + 1.0, K / theta) * (tq * norm_q + norm_1) + tq * wnorm_q + wnorm_1;
}

SpaceTimeField::SpaceTimeField(std::vector<double> times, std::vector<Field> slices)
    : times_(std::move(times)), slices_(std::move(slices)) {
  if (times_.size() != slices_.size()) throw ConfigError("times and slices differ in count");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1])) throw ConfigError("trajectory times must increase");
}

void SpaceTimeField::push_back(double t, Field slice) {
  if (!times_.empty() && !(t > times_.back()))
    throw ConfigError("trajectory times must increase");
  times_.push_back(t);
  slices_.push_back(std::move(slice));
}

Field SpaceTimeField::at(double t, const Grid& target) const {
  if (times_.empty()) throw ConfigError("empty trajectory");
  if (t < times_.front() || t > times_.back())
    throw ConfigError("time outside the trajectory range");
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin());
  if (times_[k] == t) return slices_[k].resample(target);
  const double w = (t - times_[k - 1]) / (times_[k] - times_[k - 1]);
  Field a = slices_[k - 1].resample(target);
  Field b = slices_[k].resample(target);
  a *= (1.0 - w);
  a += b * w;
  return a;
}

double time_weighted_moment_integral(std::span<const double> times,
                                     std::span<const double> moments, int m, double t) {
  if (times.size() != moments.size()) throw ConfigError("moment samples differ in length");
  if (m < 0) throw ConfigError("time weight order must be >= 0");
  if (times.empty()) return 0.0;
  if (std::isfinite(t) && (t > times.back() * (1.0 + 1e-12) || t < times.front()))
    throw ConfigError("integration end outside the sampled times");

  std::vector<double> s, y;
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) {
    s.push_back(times[k]);
    y.push_back(std::pow(times[k] + 1.0, m) * moments[k]);
  }
  if (std::isfinite(t) && s.back() < t) {
    const std::size_t k = s.size();
    const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    s.push_back(t);
    y.push_back(std::pow(t + 1.0, m) * ((1.0 - w) * moments[k - 1] + w * moments[k]));
  }
  const double full = integrate_samples(s, y);

  if (s.size() >= 7) {
    std::vector<double> hs, hy;
    for (std::size_t k = 0; k < s.size(); k += 2) {
      hs.push_back(s[k]);
      hy.push_back(y[k]);
    }
    if (hs.back() != s.back()) {
      hs.push_back(s.back());
      hy.push_back(y.back());
    }
    const double half = integrate_samples(hs, hy);
    if (std::abs(full - half) > 0.01 * std::abs(full) && std::abs(full) > 0.0) {
      std::ostringstream os;
      os << "time resolution too coarse for moment integral: " << full << " vs " << half
         << " at half resolution";
      warn(os.str());
    }
  }
  return full;
}

double time_weighted_moment_integral(const SpaceTimeField& f, int alpha, int m, double t) {
  std::vector<double> moments;
  moments.reserve(f.size());
  for (const Field& slice : f.slices()) moments.push_back(moment(slice, alpha));
  return time_weighted_moment_integral(f.times(), moments, m, t);
}

}  // namespace fracdiff
