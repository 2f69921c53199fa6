#include "fracdiff/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "fracdiff/errors.hpp"
#include "fracdiff/numerics.hpp"

namespace fracdiff {

void SolverConfig::validate() const {
  if (!(theta > 0.0 && theta <= 2.0)) throw ConfigError("theta must lie in (0, 2]");
  if (dim != 1) throw ConfigError("solvers support dim = 1 only");
  if (box_factor < 4) throw ConfigError("box_factor must be >= 4");
  if (cells_per_scale < 4) throw ConfigError("cells_per_scale must be >= 4");
  if (!(output_box_factor > 0.0) || output_box_factor > box_factor / 2.0)
    throw ConfigError("output_box_factor must lie in (0, box_factor / 2]");
  if (output_cells_per_scale < 2) throw ConfigError("output_cells_per_scale must be >= 2");
  if (steps_per_epoch < 2) throw ConfigError("steps_per_epoch must be >= 2");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (max_doublings < 0) throw ConfigError("max_doublings must be >= 0");
  if (!(blowup_cap > 0.0)) throw ConfigError("blowup_cap must be positive");
}

double diffusion_scale(double theta, double t) { return std::pow(t + 1.0, 1.0 / theta); }

Grid output_grid(const SolverConfig& config, double t) {
  const double ell = diffusion_scale(config.theta, t);
  const auto half = static_cast<std::size_t>(
      std::lround(config.output_box_factor * config.output_cells_per_scale));
  return Grid(config.output_box_factor * ell, 2 * half + 1);
}

Forcing Forcing::from_trajectory(const SpaceTimeField& trajectory) {
  if (trajectory.empty()) throw ConfigError("empty forcing trajectory");
  auto tr = std::make_shared<const SpaceTimeField>(trajectory);
  Forcing out;
  out.f = [tr](double x, double s) {
    const auto times = tr->times();
    if (s <= times.front()) return tr->slice(0).interpolate(x);
    if (s >= times.back()) return tr->slice(times.size() - 1).interpolate(x);
    const auto it = std::upper_bound(times.begin(), times.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - times.begin());
    const double w = (s - times[k - 1]) / (times[k] - times[k - 1]);
    return (1.0 - w) * tr->slice(k - 1).interpolate(x) + w * tr->slice(k).interpolate(x);
  };
  out.tail_exponent = trajectory.slice(0).tail_exponent;
  return out;
}

double NonlinearSpec::operator()(double u) const {
  return lambda * std::pow(std::abs(u), p - 1.0) * u;
}

double NonlinearSpec::A_p(double theta, int dim) const { return dim * (p - 1.0) / theta; }

double NonlinearSpec::h_sigma(double t, double theta, int dim) const {
  return std::pow(t, -(A_p(theta, dim) - 1.0) + sigma) + 1.0 / t + std::pow(t, -1.0 / theta);
}

void NonlinearSpec::validate(double theta, int dim) const {
  if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
  if (!(p > 1.0 + theta / dim))
    throw ConfigError("nonlinearity exponent needs p > 1 + theta / N");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
}

void MomentLedger::add(Entry entry) {
  if (entry.moments.size() != static_cast<std::size_t>(max_alpha_ + 1))
    throw ConfigError("ledger entry has the wrong number of moments");
  entries_.push_back(std::move(entry));
}

void MomentLedger::add_side(Entry entry) {
  if (entry.moments.size() != static_cast<std::size_t>(max_alpha_ + 1))
    throw ConfigError("ledger entry has the wrong number of moments");
  side_.push_back(std::move(entry));
}

namespace {

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

double contribution(const MomentLedger::Entry& e, int alpha, int m) {
  return e.weight * std::pow(e.node + 1.0, m) * e.moments[static_cast<std::size_t>(alpha)];
}

}  // namespace

double MomentLedger::integral(int alpha, int m, double t) const {
  if (alpha < 0 || alpha > max_alpha_) throw ConfigError("moment order not recorded in ledger");
  if (m < 0) throw ConfigError("time weight order must be >= 0");
  if (t <= 0.0) return 0.0;
  std::vector<const Entry*> side;
  for (const auto& e : side_)
    if (same_time(e.step_end, t)) side.push_back(&e);
  const double cut = side.empty() ? t : side.front()->step_begin;

  double sum = 0.0;
  for (const auto& e : entries_) {
    if (e.step_end <= cut || same_time(e.step_end, cut)) {
      sum += contribution(e, alpha, m);
    } else if (side.empty() && e.step_begin < t) {
      sum += contribution(e, alpha, m) * (t - e.step_begin) / (e.step_end - e.step_begin);
    }
  }
  for (const Entry* e : side) sum += contribution(*e, alpha, m);
  if (side.empty() && !entries_.empty() && t > entries_.back().step_end &&
      !same_time(t, entries_.back().step_end))
    throw ConfigError("ledger does not reach the requested time");
  return sum;
}

double MomentLedger::integral_to_infinity(int alpha, int m, double max_exponent) const {
  if (entries_.empty()) throw ConfigError("empty ledger");
  const double T = entries_.back().step_end;
  double sum = 0.0;
  for (const auto& e : entries_) sum += contribution(e, alpha, m);

  std::vector<double> lx, ly;
  double last = 0.0;
  for (const auto& e : entries_) {
    if (e.node + 1.0 < (T + 1.0) / 10.0) continue;
    const double y = std::pow(e.node + 1.0, m) * e.moments[static_cast<std::size_t>(alpha)];
    if (y == 0.0) continue;
    lx.push_back(std::log(e.node + 1.0));
    ly.push_back(std::log(std::abs(y)));
    last = y;
  }
  if (lx.empty()) return sum;
  if (lx.size() < 3) throw NumericalError("too few ledger samples for a tail fit");
  const LineFit fit = fit_line(lx, ly);
  if (fit.slope >= max_exponent) {
    std::ostringstream os;
    os << "moment integrand M_" << alpha << " (m=" << m << ") decays like t^" << fit.slope
       << ", not integrable";
    throw NumericalError(os.str());
  }
  const double C = std::exp(fit.intercept) * (last < 0.0 ? -1.0 : 1.0);
  return sum + C * std::pow(T + 1.0, fit.slope + 1.0) / (-fit.slope - 1.0);
}

std::vector<double> MomentLedger::nodes() const {
  std::vector<double> out;
  for (const auto& e : entries_) out.push_back(e.node);
  return out;
}

std::vector<double> MomentLedger::moments(int alpha) const {
  if (alpha < 0 || alpha > max_alpha_) throw ConfigError("moment order not recorded in ledger");
  std::vector<double> out;
  for (const auto& e : entries_) out.push_back(e.moments[static_cast<std::size_t>(alpha)]);
  return out;
}

}  // namespace fracdiff
