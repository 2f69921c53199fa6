#include "fracdiff/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/kernel_cache.hpp"
#include "fracdiff/numerics.hpp"

namespace fracdiff {

int floor_index(double k) {
  if (!std::isfinite(k)) throw ConfigError("[k] needs a finite k");
  return static_cast<int>(std::floor(k + 1e-12));
}

int ExpansionSpec::max_alpha() const { return floor_index(K); }

int ExpansionSpec::K_theta() const { return floor_index(K / theta); }

std::vector<IndexPair> ExpansionSpec::index_set() const {
  std::vector<IndexPair> out;
  for (int a = 0; a <= max_alpha(); ++a)
    for (int m = 0; m <= K_theta(); ++m) out.emplace_back(a, m);
  return out;
}

void ExpansionSpec::validate() const {
  if (!(K >= 0.0) || !std::isfinite(K)) throw ConfigError("K must be finite and >= 0");
  if (!(theta > 0.0 && theta <= 2.0)) throw ConfigError("theta must lie in (0, 2]");
  if (dim != 1) throw ConfigError("expansion profiles support dim = 1 only");
}

double ExpansionCoefficients::at(int alpha, int m) const {
  const auto it = values.find({alpha, m});
  return it == values.end() ? 0.0 : it->second;
}

void ExpansionCoefficients::validate(const ExpansionSpec& spec) const {
  for (const auto& [key, value] : values) {
    if (key.first < 0 || key.first > spec.max_alpha() || key.second < 0 ||
        key.second > spec.K_theta()) {
      std::ostringstream os;
      os << "coefficient (" << key.first << ", " << key.second << ") outside the index set";
      throw ConfigError(os.str());
    }
  }
}

ExpansionCoefficients ExpansionCoefficients::truncated(int max_alpha) const {
  ExpansionCoefficients out;
  for (const auto& [key, value] : values)
    if (key.first <= max_alpha) out.values[key] = value;
  return out;
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double g_prefactor(int alpha, int m) {
  return ((alpha + m) % 2 ? -1.0 : 1.0) / (factorial(alpha) * factorial(m));
}

// sum c g_{alpha,m}(., t) with the time-dependent factors folded in.
class Basis {
 public:
  Basis(const ExpansionCoefficients& c, double theta, double t) {
    if (t < 0.0) throw ConfigError("expansion time must be >= 0");
    const double tau = t + 1.0;
    inv_width_ = std::pow(tau, -1.0 / theta);
    for (const auto& [key, coef] : c.values) {
      if (coef == 0.0) continue;
      const auto [alpha, m] = key;
      const double scale = std::pow(tau, -(1.0 + alpha) / theta - m);
      terms_.push_back({coef * g_prefactor(alpha, m) * scale,
                        KernelLibrary::shared().get(theta, alpha, m)});
    }
  }

  double operator()(double x) const {
    const double z = x * inv_width_;
    double sum = 0.0;
    for (const auto& term : terms_) sum += term.weight * term.profile->profile(z);
    return sum;
  }

 private:
  struct Term {
    double weight;
    std::shared_ptr<const KernelProfile> profile;
  };
  double inv_width_ = 1.0;
  std::vector<Term> terms_;
};

}  // namespace

double g_term(int alpha, int m, double x, double t, double theta, int dim) {
  if (t < 0.0) throw ConfigError("g_{alpha,m} needs t >= 0");
  if (alpha < 0 || m < 0) throw ConfigError("derivative orders must be >= 0");
  const auto profile = KernelLibrary::shared().get(theta, alpha, m, dim);
  return g_prefactor(alpha, m) * (*profile)(x, t + 1.0);
}

Field g_field(int alpha, int m, double t, const Grid& grid, double theta) {
  ExpansionCoefficients c;
  c.values[{alpha, m}] = 1.0;
  return evaluate_expansion(c, theta, t, grid);
}

double evaluate_expansion(const ExpansionCoefficients& c, double theta, double x, double t) {
  return Basis(c, theta, t)(x);
}

Field evaluate_expansion(const ExpansionCoefficients& c, double theta, double t,
                         const Grid& grid) {
  const Basis basis(c, theta, t);
  Field out = Field::sample(grid, [&](double x) { return basis(x); });
  out.tail_exponent = 1.0 + theta;
  return out;
}

std::vector<double> initial_moments(const Field& phi, int max_alpha) {
  std::vector<double> out(static_cast<std::size_t>(max_alpha + 1), 0.0);
  if (phi.size() == 0) return out;
  for (int a = 0; a <= max_alpha; ++a) out[static_cast<std::size_t>(a)] = moment(phi, a);
  return out;
}

ExpansionCoefficients moment_coefficients(std::span<const double> phi_moments,
                                          const MomentLedger* ledger, const ExpansionSpec& spec,
                                          double t) {
  spec.validate();
  if (phi_moments.size() < static_cast<std::size_t>(spec.max_alpha() + 1))
    throw ConfigError("too few moments of phi");
  if (ledger && ledger->max_alpha() < spec.max_alpha())
    throw ConfigError("ledger lacks the moment orders the expansion needs");
  ExpansionCoefficients c;
  for (const auto& [alpha, m] : spec.index_set()) {
    double v = phi_moments[static_cast<std::size_t>(alpha)];
    if (ledger) v += ledger->integral(alpha, m, t);
    c.values[{alpha, m}] = v;
  }
  return c;
}

Field build_w(const Field& phi, const SpaceTimeField& f, const ExpansionSpec& spec, double t,
              const Grid& grid) {
  spec.validate();
  const auto mphi = initial_moments(phi, spec.max_alpha());
  ExpansionCoefficients c = moment_coefficients(mphi, nullptr, spec, t);
  if (!f.empty())
    for (auto& [key, value] : c.values)
      value += time_weighted_moment_integral(f, key.first, key.second, t);
  return evaluate_expansion(c, spec.theta, t, grid);
}

Field build_w(const Field& phi, const MomentLedger* f_ledger, const ExpansionSpec& spec, double t,
              const Grid& grid) {
  const auto mphi = initial_moments(phi, spec.max_alpha());
  return evaluate_expansion(moment_coefficients(mphi, f_ledger, spec, t), spec.theta, t, grid);
}

namespace {

void check_convection(const ExpansionSpec& spec) {
  spec.validate();
  if (!(spec.theta > 1.0 && spec.theta < 2.0))
    throw ConfigError("convection profiles need 1 < theta < 2");
}

// d_x g_{alpha,m} = -(alpha + 1) g_{alpha+1,m}.
void add_gradient_terms(ExpansionCoefficients& c, int alpha, int m, double flux_integral) {
  c.values[{alpha + 1, m}] += -(alpha + 1.0) * flux_integral;
}

}  // namespace

Field build_z(const Field& phi, const SpaceTimeField& flux, const ExpansionSpec& spec, double t,
              const Grid& grid, bool with_gradient) {
  check_convection(spec);
  const auto mphi = initial_moments(phi, spec.max_alpha());
  ExpansionCoefficients c = moment_coefficients(mphi, nullptr, spec, t);
  if (with_gradient && !flux.empty())
    for (const auto& [alpha, m] : spec.index_set())
      add_gradient_terms(c, alpha, m, time_weighted_moment_integral(flux, alpha, m, t));
  return evaluate_expansion(c, spec.theta, t, grid);
}

Field build_z(const Field& phi, const MomentLedger& flux_ledger, const ExpansionSpec& spec,
              double t, const Grid& grid, bool with_gradient) {
  check_convection(spec);
  const auto mphi = initial_moments(phi, spec.max_alpha());
  ExpansionCoefficients c = moment_coefficients(mphi, nullptr, spec, t);
  if (with_gradient) {
    if (flux_ledger.max_alpha() < spec.max_alpha())
      throw ConfigError("flux ledger lacks the moment orders the expansion needs");
    for (const auto& [alpha, m] : spec.index_set())
      add_gradient_terms(c, alpha, m, flux_ledger.integral(alpha, m, t));
  }
  return evaluate_expansion(c, spec.theta, t, grid);
}

MomentLedger flux_ledger_from_divergence(const MomentLedger& divergence_ledger) {
  const int top = divergence_ledger.max_alpha() - 1;
  if (top < 0) throw ConfigError("divergence ledger needs moments up to order >= 1");
  auto convert = [top](MomentLedger::Entry e) {
    std::vector<double> m(static_cast<std::size_t>(top + 1));
    for (int a = 0; a <= top; ++a)
      m[static_cast<std::size_t>(a)] = -e.moments[static_cast<std::size_t>(a + 1)] / (a + 1.0);
    e.moments = std::move(m);
    return e;
  };
  MomentLedger out(top);
  for (const auto& e : divergence_ledger.entries()) out.add(convert(e));
  for (const auto& e : divergence_ledger.side_entries()) out.add_side(convert(e));
  return out;
}

namespace {

// U_k(x, s) for the forcing of level k + 1. Coefficient sums are cached per s;
// the stepper samples one time slice at a time.
class ChainLevel {
 public:
  ChainLevel(std::vector<double> phi_moments, const MomentLedger& u_ledger, ExpansionSpec spec)
      : phi_moments_(std::move(phi_moments)), u_ledger_(&u_ledger), spec_(spec) {}

  void add_correction(SpaceTimeField duhamel, MomentLedger ledger) {
    trajectory_ = Forcing::from_trajectory(duhamel);
    ledger_ = std::make_shared<MomentLedger>(std::move(ledger));
  }

  double operator()(double x, double s) const {
    std::lock_guard lock(mutex_);
    if (!basis_ || s != cached_s_) {
      ExpansionCoefficients c = moment_coefficients(phi_moments_, u_ledger_, spec_, s);
      if (ledger_)
        for (auto& [key, value] : c.values) value -= ledger_->integral(key.first, key.second, s);
      basis_ = std::make_unique<Basis>(c, spec_.theta, s);
      cached_s_ = s;
    }
    double v = (*basis_)(x);
    if (ledger_) v += trajectory_.f(x, s);
    return v;
  }

 private:
  std::vector<double> phi_moments_;
  const MomentLedger* u_ledger_;
  ExpansionSpec spec_;
  Forcing trajectory_;
  std::shared_ptr<MomentLedger> ledger_;
  mutable std::mutex mutex_;
  mutable std::unique_ptr<Basis> basis_;
  mutable double cached_s_ = 0.0;
};

// Output times plus a geometric grid dense enough to interpolate a level.
std::vector<double> dense_times(std::span<const double> times, double theta) {
  const double T = *std::max_element(times.begin(), times.end());
  std::vector<double> out(times.begin(), times.end());
  constexpr int kPerDoubling = 32;
  for (int j = 1;; ++j) {
    const double s = std::pow(2.0, theta * j / kPerDoubling) - 1.0;
    if (s >= T) break;
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

UChain build_U_chain(const Field& phi, const NonlinearSpec& nl, const Solution& u,
                     const ExpansionSpec& spec, int n_max, std::span<const double> times,
                     const SolverConfig& config) {
  spec.validate();
  nl.validate(spec.theta, spec.dim);
  if (n_max < 0) throw ConfigError("n_max must be >= 0");
  if (times.empty()) throw ConfigError("no sample times");
  if (u.ledger.max_alpha() < spec.max_alpha())
    throw ConfigError("solution ledger lacks the moment orders the expansion needs");
  if (spec.theta != config.theta) throw ConfigError("expansion and solver theta differ");

  const int A = spec.max_alpha();
  const auto mphi = initial_moments(phi, A);
  UChain chain;
  chain.gap_condition = nl.p > 1.0 + (2.0 * spec.K + spec.theta) / spec.dim;

  for (double t : times) {
    UChainSample sample;
    sample.t = t;
    sample.U.push_back(evaluate_expansion(moment_coefficients(mphi, &u.ledger, spec, t), spec.theta,
                                          t, output_grid(config, t)));
    chain.samples.push_back(std::move(sample));
  }

  SolverConfig linear = config;
  linear.rule = DuhamelRule::midpoint;
  linear.steps_per_epoch = u.steps_per_epoch > 0 ? u.steps_per_epoch : config.steps_per_epoch;
  auto level = std::make_shared<ChainLevel>(mphi, u.ledger, spec);
  for (int n = 1; n <= n_max; ++n) {
    Forcing forcing;
    forcing.f = [level, nl](double x, double s) { return nl((*level)(x, s)); };
    forcing.tail_exponent = nl.p * (1.0 + spec.theta);
    const bool last = n == n_max;
    const auto solve_times = last ? std::vector<double>(times.begin(), times.end())
                                  : dense_times(times, spec.theta);
    Solution d = solve_linear(Field{}, forcing, solve_times, linear, A);
    for (auto& sample : chain.samples) {
      const Grid grid = output_grid(config, sample.t);
      ExpansionCoefficients c;
      for (const auto& [alpha, m] : spec.index_set())
        c.values[{alpha, m}] = -d.ledger.integral(alpha, m, sample.t);
      Field Un = sample.U.front() + d.u.at(sample.t, grid) +
                 evaluate_expansion(c, spec.theta, sample.t, grid);
      sample.U.push_back(std::move(Un));
    }
    if (!last) {
      SpaceTimeField traj;
      traj.push_back(0.0, Field::zeros(output_grid(config, 0.0)));
      for (std::size_t k = 0; k < d.u.size(); ++k)
        if (d.u.times()[k] > 0.0) traj.push_back(d.u.times()[k], d.u.slice(k));
      auto next = std::make_shared<ChainLevel>(mphi, u.ledger, spec);
      next->add_correction(std::move(traj), std::move(d.ledger));
      level = next;
    }
  }

  try {
    ExpansionCoefficients star;
    for (const auto& [alpha, m] : spec.index_set())
      star.values[{alpha, m}] =
          mphi[static_cast<std::size_t>(alpha)] +
          (u.ledger.entries().empty() ? 0.0 : u.ledger.integral_to_infinity(alpha, m));
    for (auto& sample : chain.samples)
      sample.U_star = evaluate_expansion(star, spec.theta, sample.t, output_grid(config, sample.t));
  } catch (const NumericalError& e) {
    chain.U_star_error = e.what();
  }
  return chain;
}

LimitMass limit_mass(const Field& phi, const Solution& u) {
  if (u.ledger.entries().empty()) {
    return {phi.size() ? moment(phi, 0) : 0.0, 0.0};
  }
  const double m0 = phi.size() ? moment(phi, 0) : 0.0;
  const double T = u.ledger.entries().back().step_end;
  const double finite = u.ledger.integral(0, 0, T);
  const double total = u.ledger.integral_to_infinity(0, 0);
  LimitMass out;
  out.value = m0 + total;
  out.tail_fraction = out.value == 0.0 ? 0.0 : std::abs(total - finite) / std::abs(out.value);
  if (out.tail_fraction > 0.01) {
    std::ostringstream os;
    os << "limit mass has not settled: extrapolated tail is " << 100.0 * out.tail_fraction
       << "% of M_*";
    warn(os.str());
  }
  return out;
}

double F_infinity(const NonlinearSpec& nl, double M_star, double theta, double x, double t) {
  static thread_local std::shared_ptr<const KernelProfile> kernel;
  if (!kernel || kernel->theta() != theta) kernel = KernelLibrary::shared().get(theta, 0, 0);
  return nl(M_star * (*kernel)(x, t + 1.0));
}

std::vector<Field> build_v(const Field& phi, const NonlinearSpec& nl, const Solution& u,
                           const ExpansionSpec& spec, std::span<const double> times,
                           const SolverConfig& config) {
  spec.validate();
  nl.validate(spec.theta, spec.dim);
  if (times.empty()) throw ConfigError("no sample times");
  const int A = spec.max_alpha();
  if (u.ledger.max_alpha() < A)
    throw ConfigError("solution ledger lacks the moment orders the expansion needs");
  const auto mphi = initial_moments(phi, A);
  const double M_star = limit_mass(phi, u).value;

  std::optional<Solution> inf;
  if (nl.lambda != 0.0) {
    Forcing forcing;
    const double theta = spec.theta;
    forcing.f = [nl, M_star, theta](double x, double s) {
      return F_infinity(nl, M_star, theta, x, s);
    };
    forcing.tail_exponent = nl.p * (1.0 + theta);
    SolverConfig linear = config;
    linear.steps_per_epoch = u.steps_per_epoch > 0 ? u.steps_per_epoch : config.steps_per_epoch;
    inf = solve_linear(Field{}, forcing, times, linear, A);
  }

  std::vector<Field> out;
  for (double t : times) {
    const Grid grid = output_grid(config, t);
    ExpansionCoefficients c = moment_coefficients(mphi, &u.ledger, spec, t);
    if (inf)
      for (auto& [key, value] : c.values) value -= inf->ledger.integral(key.first, key.second, t);
    Field v = evaluate_expansion(c, spec.theta, t, grid);
    if (inf) v += inf->u.at(t, grid);
    out.push_back(std::move(v));
  }
  return out;
}

std::string expansion_report_json(const ExpansionSpec& spec, const ExpansionCoefficients& c,
                                  double t, const Grid& grid, const WeightSpec& norm) {
  spec.validate();
  c.validate(spec);
  using nlohmann::json;
  auto number = [](double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); };
  json doc;
  doc["K"] = spec.K;
  doc["theta"] = spec.theta;
  doc["dim"] = spec.dim;
  doc["K_theta"] = spec.K_theta();
  doc["t"] = t;
  doc["norm"] = {{"q", number(norm.q)}, {"ell", norm.ell}};
  json index = json::array();
  for (const auto& [alpha, m] : spec.index_set()) index.push_back({alpha, m});
  doc["index_set"] = index;
  json terms = json::array();
  for (const auto& [alpha, m] : spec.index_set()) {
    const double coef = c.at(alpha, m);
    const Field term = g_field(alpha, m, t, grid, spec.theta) * coef;
    terms.push_back({{"alpha", alpha},
                     {"m", m},
                     {"coefficient", coef},
                     {"norm", number(weighted_norm(term, norm))}});
  }
  doc["terms"] = terms;
  return doc.dump(2);
}

}  // namespace fracdiff
