#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/expansion.hpp"
#include "fracdiff/semigroup.hpp"

namespace fracdiff {

enum class ProblemKind { linear, convection, nonlinear, limit_profile };

std::string to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(const std::string& name);

/// Initial datum from the built-in library:
///   gaussian          amplitude * N(center, width^2)
///   indicator         amplitude on [center - width, center + width]
///   asymmetric_bump   0.7 N(0.8, 0.5^2) + 0.3 N(-1, 0.3^2), stretched by width
///   zero
struct DatumSpec {
  std::string kind = "gaussian";
  double amplitude = 1.0;
  double center = 0.0;
  double width = 1.0;

  void validate() const;
  Field sample() const;
};

/// Source term from the built-in library:
///   none
///   gaussian_exp      amplitude * e^{-decay s} N(center, width^2)
///   kernel            amplitude * G_theta(x, s + 1)
struct ForcingSpec {
  std::string kind = "none";
  double amplitude = 1.0;
  double decay = 1.0;
  double center = 0.0;
  double width = 1.0;

  void validate() const;
  bool empty() const { return kind == "none"; }
  Forcing forcing(double theta) const;
  /// d_x f, the source of the convection problem.
  Forcing divergence(double theta) const;
};

/// One profile compared against the solution.
///   w, z, z_stripped, U0, U1, ..., U_star, v
struct ProfileSpec {
  std::string label;
  std::string name;
  /// Keep only the terms with alpha <= truncate_alpha.
  std::optional<int> truncate_alpha;
  /// Explicit checks replacing the default claim of the profile.
  std::optional<double> max_slope;
  std::optional<double> expected_slope;
};

/// slope(shallower) - slope(steeper) >= min_gap.
struct GapCheck {
  std::string steeper;
  std::string shallower;
  double min_gap = 0.5;
};

struct ExperimentConfig {
  std::string id;
  ProblemKind kind = ProblemKind::linear;
  double theta = 1.0;
  int dim = 1;
  double K = 1.0;
  double q = 1.0;
  double ell = 0.0;
  DatumSpec datum;
  ForcingSpec forcing;
  NonlinearSpec nonlinear;
  SolverConfig solver;
  std::vector<double> times;
  std::vector<ProfileSpec> profiles;
  std::vector<GapCheck> gaps;
  double slope_tolerance = 0.15;

  /// Rejects parameter sets outside the hypotheses of the tested estimate.
  void validate() const;
  ExpansionSpec expansion() const { return {K, theta, dim}; }
  WeightSpec weight() const { return {q, ell, K}; }
};

ExperimentConfig experiment_from_json(const std::string& text);
std::string experiment_to_json(const ExperimentConfig& config);
/// A file holds one experiment object or an array of them.
std::vector<ExperimentConfig> load_experiments(const std::filesystem::path& path);

/// count points from first to last, equally spaced in log t.
std::vector<double> geometric_ladder(double first, double last, int count);

struct RateFit {
  double slope = 0.0;
  double residual = 0.0;
};

/// Thrown by fit_rate for non-positive errors: the profile matched the
/// solution to round-off.
class SaturatedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Least-squares slope of log(error) against log(t); residual is the RMS
/// deviation of the fit.
RateFit fit_rate(std::span<const double> times, std::span<const double> errors);

/// What the measured series is held to.
///   vanishing  scaled error decreasing over the final 1.5 decades
///   bounded    scaled error not growing (slope <= tolerance)
///   slope      measured slope within tolerance of -predicted
enum class Claim { vanishing, bounded, slope };

std::string to_string(Claim claim);

struct SeriesReport {
  std::string label;
  std::string profile;
  Claim claim = Claim::vanishing;
  double predicted_exponent = 0.0;
  std::vector<double> times;
  std::vector<double> errors;
  std::vector<double> scaled_errors;
  double slope = 0.0;
  double residual = 0.0;
  /// Slope of log(scaled error) over the trend window.
  double scaled_trend = 0.0;
  /// pass, fail or saturated.
  std::string verdict;
  /// Distance from the threshold; positive when passing.
  double margin = 0.0;
  std::string detail;
};

struct GapResult {
  GapCheck check;
  double gap = 0.0;
  bool pass = false;
};

struct RateReport {
  ExperimentConfig config;
  std::vector<SeriesReport> series;
  std::vector<GapResult> gaps;
  /// Set when the solver aborted and only a prefix of the ladder was measured.
  bool partial = false;
  std::string message;

  bool passed() const;
  const SeriesReport& find(const std::string& label) const;
};

/// Theorem rate of |||u - profile|||_{q,ell} for the named profile, with the
/// kind of claim the asymptotics support at that rate.
std::pair<double, Claim> predicted_rate(const ExperimentConfig& config, const ProfileSpec& profile);

RateReport run_experiment(const ExperimentConfig& config);
/// Experiments run concurrently on up to `jobs` threads; results keep the
/// input order.
std::vector<RateReport> run_batch(const std::vector<ExperimentConfig>& configs, unsigned jobs = 1);

/// Header of every report CSV.
inline constexpr const char* kReportHeader =
    "experiment_id,theta,dim,K,q,ell,t,error,scaled_error,predicted_exponent,fitted_slope,"
    "residual,verdict";

std::string report_csv(const RateReport& report);
std::string report_index_json(const std::vector<RateReport>& reports);
std::vector<RateReport> reports_from_index_json(const std::string& text);
/// One <id>.csv per report plus index.json in out_dir.
void emit_report(const std::vector<RateReport>& reports, const std::filesystem::path& out_dir);

/// Named experiment batches.
std::vector<std::string> preset_names();
std::vector<ExperimentConfig> preset(const std::string& name);

/// Scaled ratios sampled over a parameter lattice, each held to a cap.
struct RatioSample {
  std::string label;
  double t = 0.0;
  double ratio = 0.0;
};

struct BoundednessReport {
  std::string name;
  double cap = 0.0;
  std::vector<RatioSample> samples;
  double max_ratio = 0.0;
  bool pass = false;
};

/// t^{(N/theta)(1/q-1/r) + alpha/theta + m} |||d_t^m d_x^alpha e^{-tA} phi|||_{r,ell}
///   / (t^{ell/theta} ||phi||_q + |||phi|||_{q,ell})
/// over t in [0.1, 100] and admissible (q, r, alpha, m, ell).
BoundednessReport semigroup_derivative_suite(double theta, double cap = 50.0);

/// t^{(N/theta)(1-1/r)} (t+1)^{(K-ell)/theta} |||f(t)|||_{r,ell} / E_{K,q}[f](t)
/// for 1 <= r <= q, 0 <= ell <= K over the slices of a trajectory.
BoundednessReport forcing_interpolation_suite(const SpaceTimeField& f, double K, double q,
                                              double theta, double cap = 10.0);

/// (t+1)^{(N/theta)(1-1/q) - ell/theta} |||u(t)|||_{q,ell} over the slices with
/// t in [t_min, t_max] and admissible (q, ell <= K). Each ratio is the scaled
/// norm over its running minimum, held to 1 + slack (non-increasing trend).
BoundednessReport decay_trend_suite(const SpaceTimeField& u, double K, double theta, double t_min,
                                    double t_max, double slack = 0.05);

}  // namespace fracdiff
