#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fracdiff/field.hpp"
#include "fracdiff/semigroup.hpp"

namespace fracdiff {

/// [k]: the integer with k - 1 < [k] <= k.
int floor_index(double k);

/// (alpha, m): spatial derivative order and time derivative order.
using IndexPair = std::pair<int, int>;

struct ExpansionSpec {
  double K = 0.0;
  double theta = 1.0;
  int dim = 1;

  /// [K], the largest spatial moment order.
  int max_alpha() const;
  /// K_theta = [K / theta], the largest time derivative order.
  int K_theta() const;
  /// All (alpha, m) with alpha <= [K] and m <= K_theta, alpha-major.
  std::vector<IndexPair> index_set() const;
  void validate() const;
};

struct ExpansionCoefficients {
  std::map<IndexPair, double> values;

  double at(int alpha, int m) const;
  /// Throws ConfigError if a key lies outside spec.index_set().
  void validate(const ExpansionSpec& spec) const;
  /// Drops every term with alpha > max_alpha.
  ExpansionCoefficients truncated(int max_alpha) const;
};

/// g_{alpha,m}(x, t) = ((-1)^{alpha+m} / (alpha! m!)) d_t^m d_x^alpha G_theta(x, t + 1).
double g_term(int alpha, int m, double x, double t, double theta, int dim = 1);
Field g_field(int alpha, int m, double t, const Grid& grid, double theta);

/// sum c_{alpha,m} g_{alpha,m}(x, t).
double evaluate_expansion(const ExpansionCoefficients& c, double theta, double x, double t);
Field evaluate_expansion(const ExpansionCoefficients& c, double theta, double t, const Grid& grid);

/// M_alpha(phi) for alpha <= max_alpha; tail warnings are forwarded.
std::vector<double> initial_moments(const Field& phi, int max_alpha);

/// c_{alpha,m}(t) = M_alpha(phi) + integral_0^t (s+1)^m M_alpha(f(s)) ds, with
/// the time integral taken from the ledger (none if ledger is null).
ExpansionCoefficients moment_coefficients(std::span<const double> phi_moments,
                                          const MomentLedger* ledger, const ExpansionSpec& spec,
                                          double t);

/// Higher-order profile w of the linear problem, on the given grid. An empty
/// forcing (no slices, or a null ledger) leaves only the moments of phi.
Field build_w(const Field& phi, const SpaceTimeField& f, const ExpansionSpec& spec, double t,
              const Grid& grid);
Field build_w(const Field& phi, const MomentLedger* f_ledger, const ExpansionSpec& spec, double t,
              const Grid& grid);

/// Profile z of the convection problem u_t + A u = d_x f. With
/// with_gradient = false only the moments of phi are kept.
Field build_z(const Field& phi, const SpaceTimeField& flux, const ExpansionSpec& spec, double t,
              const Grid& grid, bool with_gradient = true);
Field build_z(const Field& phi, const MomentLedger& flux_ledger, const ExpansionSpec& spec,
              double t, const Grid& grid, bool with_gradient = true);

/// Ledger of M_alpha(f) from a ledger of M_alpha(d_x f), using
/// M_alpha(f) = -M_{alpha+1}(d_x f) / (alpha + 1).
MomentLedger flux_ledger_from_divergence(const MomentLedger& divergence_ledger);

/// U_0 ... U_n and U_* at one time.
struct UChainSample {
  double t = 0.0;
  std::vector<Field> U;
  std::optional<Field> U_star;
};

struct UChain {
  std::vector<UChainSample> samples;
  /// p > 1 + (2K + theta) / N, required for U_* to be meaningful.
  bool gap_condition = false;
  /// Set when U_* could not be formed (non-integrable moment tail).
  std::string U_star_error;
};

/// Builds the chain from a nonlinear solution. U_n, n >= 1, needs one linear
/// solve per level; forcing for n = 1 is F(U_0) evaluated in closed form.
UChain build_U_chain(const Field& phi, const NonlinearSpec& nl, const Solution& u,
                     const ExpansionSpec& spec, int n_max, std::span<const double> times,
                     const SolverConfig& config);

/// M_* = M_0(phi) + integral_0^inf M_0(F(u)) ds.
struct LimitMass {
  double value = 0.0;
  /// Extrapolated part beyond the last step, relative to |value|.
  double tail_fraction = 0.0;
};
LimitMass limit_mass(const Field& phi, const Solution& u);

/// F_inf(x, t) = F(M_* G_theta(x, t + 1)).
double F_infinity(const NonlinearSpec& nl, double M_star, double theta, double x, double t);

/// Profile v at the requested times.
std::vector<Field> build_v(const Field& phi, const NonlinearSpec& nl, const Solution& u,
                           const ExpansionSpec& spec, std::span<const double> times,
                           const SolverConfig& config);

/// Taylor remainders of the kernel, each evaluated in its difference form and
/// in its integral form.
struct RemainderValues {
  double S = 0.0;
  double T = 0.0;
  double R = 0.0;
  double S_integral = 0.0;
  double T_integral = 0.0;
  double R_composed = 0.0;

  double max_disagreement() const;
};

/// S^m_ell(x, y, t), T(x, y, t, s) and R(x, y, t, s) for 0 <= s < t and
/// 0 <= ell <= K. Throws NumericalError if a pair disagrees by more than
/// tolerance.
RemainderValues remainder_kernels(double x, double y, double t, double s, double ell, int m,
                                  const ExpansionSpec& spec, double tolerance = 1e-8);

/// JSON document with the index set, the coefficients and the weighted norms
/// |||c g_{alpha,m}(t)|||_{q,ell} of each term on the grid.
std::string expansion_report_json(const ExpansionSpec& spec, const ExpansionCoefficients& c,
                                  double t, const Grid& grid, const WeightSpec& norm);

}  // namespace fracdiff
