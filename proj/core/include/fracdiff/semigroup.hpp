#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fracdiff/field.hpp"
#include "fracdiff/kernel.hpp"

namespace fracdiff {

/// Quadrature of the forcing over one time step.
enum class DuhamelRule { midpoint, gauss2 };

/// Numerical parameters of the solvers. Lengths are in units of the diffusion
/// scale (t+1)^{1/theta}, so grids follow the solution as it spreads.
struct SolverConfig {
  double theta = 1.0;
  int dim = 1;
  /// Stepping box half width, in diffusion scales.
  int box_factor = 128;
  int cells_per_scale = 32;
  /// Output grid half width and resolution, in diffusion scales.
  double output_box_factor = 32.0;
  int output_cells_per_scale = 16;
  /// Time steps per epoch; an epoch doubles the diffusion scale.
  int steps_per_epoch = 128;
  DuhamelRule rule = DuhamelRule::gauss2;
  /// Step doubling stops once successive relative differences are < tolerance / 2.
  double tolerance = 1e-5;
  int max_doublings = 3;
  double blowup_cap = 1e6;

  void validate() const;
};

/// (t+1)^{1/theta}.
double diffusion_scale(double theta, double t);
Grid output_grid(const SolverConfig& config, double t);

/// Source term f(x, s) given pointwise, with optional far-field decay |x|^{-a}.
struct Forcing {
  std::function<double(double x, double s)> f;
  std::optional<double> tail_exponent;

  bool empty() const noexcept { return !f; }
  /// Piecewise linear in time between the trajectory's slices.
  static Forcing from_trajectory(const SpaceTimeField& trajectory);
};

/// F(u) = lambda |u|^{p-1} u together with the derived rate parameters.
struct NonlinearSpec {
  double lambda = 0.0;
  double p = 2.0;
  double sigma = 0.1;

  double operator()(double u) const;
  /// A_p = N (p - 1) / theta.
  double A_p(double theta, int dim) const;
  /// h_sigma(t) = t^{-(A_p - 1) + sigma} + t^{-1} + t^{-1/theta}.
  double h_sigma(double t, double theta, int dim) const;
  /// Requires p > 1 + theta / N and sigma > 0.
  void validate(double theta, int dim) const;
};

/// Moments M_alpha of the forcing actually fed to a time stepper, one entry
/// per quadrature node. Integrals over [0, t] use the stepper's own nodes, so
/// they are consistent with the computed solution.
class MomentLedger {
 public:
  struct Entry {
    double step_begin = 0.0;
    double step_end = 0.0;
    double node = 0.0;
    double weight = 0.0;
    std::vector<double> moments;
  };

  MomentLedger() = default;
  explicit MomentLedger(int max_alpha) : max_alpha_(max_alpha) {}

  int max_alpha() const noexcept { return max_alpha_; }
  void add(Entry entry);
  /// Partial step ending at an output time between two steps.
  void add_side(Entry entry);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const std::vector<Entry>& side_entries() const noexcept { return side_; }

  /// integral_0^t (s+1)^m M_alpha(f(s)) ds. Exact on the stepper's nodes at
  /// step ends and output times, linear in between.
  double integral(int alpha, int m, double t) const;

  /// Same integral extended to t = infinity with a power-law fit of the
  /// integrand over its last decade. Throws NumericalError if the fitted
  /// exponent is >= max_exponent (non-integrable).
  double integral_to_infinity(int alpha, int m, double max_exponent = -1.1) const;

  /// (node, M_alpha) samples of the main chain.
  std::vector<double> nodes() const;
  std::vector<double> moments(int alpha) const;

 private:
  int max_alpha_ = 0;
  std::vector<Entry> entries_;
  std::vector<Entry> side_;
};

/// Output of a time-stepping solve.
struct Solution {
  SpaceTimeField u;
  MomentLedger ledger;
  int steps_per_epoch = 0;
  bool converged = true;
};

/// [K(t) * phi](x) on the target grid, where K is the kernel or one of its
/// derivative profiles. For the kernel itself, times too short for phi's grid
/// are handled with band-limited weights; t = 0 returns phi.
Field apply_semigroup(const Field& phi, double t, const Grid& target, const KernelProfile& kernel);
Field apply_semigroup(const Field& phi, double t, const SolverConfig& config);

/// integral_0^t e^{-(t-s)A} f(s) ds on output_grid(config, t).
Field duhamel(const Forcing& f, double t, const SolverConfig& config);
Field duhamel(const SpaceTimeField& f, double t, const SolverConfig& config);

/// Mild solution of u_t + A u = f, u(0) = phi at the requested times. The
/// ledger records M_alpha(f), alpha <= max_alpha, at the quadrature nodes.
Solution solve_linear(const Field& phi, const Forcing& f, std::span<const double> times,
                      const SolverConfig& config, int max_alpha = 0);

/// Mild solution of u_t + A u = F(u) by the exponential midpoint rule with
/// step doubling. The ledger records M_alpha(F(u)) at the midpoints.
Solution solve_nonlinear(const Field& phi, const NonlinearSpec& nl, std::span<const double> times,
                         const SolverConfig& config, int max_alpha = 0);

}  // namespace fracdiff
