#include <cmath>
#include <numbers>

#include "fracdiff/errors.hpp"
#include "fracdiff/harness.hpp"
#include "fracdiff/kernel_cache.hpp"

namespace fracdiff {

namespace {

double normal(double x, double mu, double s) {
  const double z = (x - mu) / s;
  return std::exp(-0.5 * z * z) / (s * std::sqrt(2.0 * std::numbers::pi));
}

double bump(double x) { return 0.7 * normal(x, 0.8, 0.5) + 0.3 * normal(x, -1.0, 0.3); }

}  // namespace

void DatumSpec::validate() const {
  if (kind != "gaussian" && kind != "indicator" && kind != "asymmetric_bump" && kind != "zero")
    throw ConfigError("unknown datum \"" + kind + "\"");
  if (!std::isfinite(amplitude) || !std::isfinite(center))
    throw ConfigError("datum amplitude and center must be finite");
  if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("datum width must be > 0");
}

Field DatumSpec::sample() const {
  validate();
  const double reach = kind == "asymmetric_bump" ? 3.0 * width : width;
  const double half = std::max(8.0, std::abs(center) + 12.0 * reach);
  const Grid grid = Grid::with_spacing(half, std::min(width, 1.0) / 32.0);
  const double a = amplitude, c = center, w = width;
  Field f;
  if (kind == "gaussian") {
    f = Field::sample(grid, [=](double x) { return a * normal(x, c, w); });
  } else if (kind == "indicator") {
    f = Field::sample(grid, [=](double x) { return std::abs(x - c) <= w ? a : 0.0; });
  } else if (kind == "asymmetric_bump") {
    f = Field::sample(grid, [=](double x) { return a * bump((x - c) / w) / w; });
  } else {
    f = Field::zeros(grid);
  }
  f.support_radius = half;
  return f;
}

void ForcingSpec::validate() const {
  if (kind != "none" && kind != "gaussian_exp" && kind != "kernel")
    throw ConfigError("unknown forcing \"" + kind + "\"");
  if (!std::isfinite(amplitude) || !std::isfinite(center))
    throw ConfigError("forcing amplitude and center must be finite");
  if (kind == "gaussian_exp" && !(decay > 0.0)) throw ConfigError("forcing decay must be > 0");
  if (!(width > 0.0)) throw ConfigError("forcing width must be > 0");
}

Forcing ForcingSpec::forcing(double theta) const {
  validate();
  Forcing f;
  const double a = amplitude, c = center, w = width, d = decay;
  if (kind == "gaussian_exp") {
    f.f = [=](double x, double s) { return a * std::exp(-d * s) * normal(x, c, w); };
  } else if (kind == "kernel") {
    auto G = KernelLibrary::shared().get(theta, 0, 0);
    f.f = [=](double x, double s) { return a * (*G)(x, s + 1.0); };
    f.tail_exponent = 1.0 + theta;
  }
  return f;
}

Forcing ForcingSpec::divergence(double theta) const {
  validate();
  Forcing f;
  const double a = amplitude, c = center, w = width, d = decay;
  if (kind == "gaussian_exp") {
    f.f = [=](double x, double s) {
      return -a * std::exp(-d * s) * (x - c) / (w * w) * normal(x, c, w);
    };
  } else if (kind == "kernel") {
    auto G1 = KernelLibrary::shared().get(theta, 1, 0);
    f.f = [=](double x, double s) { return a * (*G1)(x, s + 1.0); };
    f.tail_exponent = 2.0 + theta;
  }
  return f;
}

namespace {

ExperimentConfig base(const std::string& id, ProblemKind kind, double theta, double K, double q,
                      double ell) {
  ExperimentConfig c;
  c.id = id;
  c.kind = kind;
  c.theta = theta;
  c.K = K;
  c.q = q;
  c.ell = ell;
  c.solver.theta = theta;
  c.times = geometric_ladder(30.0, 1000.0, 8);
  return c;
}

ProfileSpec profile(std::string label, std::string name) {
  ProfileSpec p;
  p.label = std::move(label);
  p.name = std::move(name);
  return p;
}

std::vector<ExperimentConfig> linear_rate() {
  auto c = base("linear-rate", ProblemKind::linear, 1.0, 1.0, 1.0, 0.0);
  c.datum.kind = "asymmetric_bump";
  auto full = profile("w", "w");
  full.max_slope = -1.5;
  auto cut = profile("w_alpha0", "w");
  cut.truncate_alpha = 0;
  cut.expected_slope = -1.0;
  c.profiles = {full, cut};
  c.gaps = {{"w", "w_alpha0", 0.5}};
  return {c};
}

std::vector<ExperimentConfig> linear_sup() {
  auto c = base("linear-sup", ProblemKind::linear, 1.0, 1.0, kInf, 0.0);
  c.datum.kind = "asymmetric_bump";
  c.profiles = {profile("w", "w")};
  return {c};
}

std::vector<ExperimentConfig> inhomogeneous() {
  std::vector<ExperimentConfig> out;
  const std::pair<double, double> norms[] = {{1.0, 0.0}, {kInf, 0.0}, {kInf, 1.0}};
  const char* ids[] = {"inhomogeneous-q1-l0", "inhomogeneous-qinf-l0", "inhomogeneous-qinf-l1"};
  for (int i = 0; i < 3; ++i) {
    auto c = base(ids[i], ProblemKind::linear, 1.0, 1.0, norms[i].first, norms[i].second);
    c.datum.kind = "gaussian";
    c.forcing.kind = "gaussian_exp";
    c.forcing.center = 0.5;
    c.profiles = {profile("w", "w")};
    out.push_back(c);
  }
  return out;
}

std::vector<ExperimentConfig> convection() {
  auto c = base("convection", ProblemKind::convection, 1.5, 1.0, kInf, 0.0);
  c.datum.kind = "gaussian";
  c.forcing.kind = "gaussian_exp";
  c.forcing.amplitude = 4.0;
  c.times = geometric_ladder(100.0, 10000.0, 8);
  c.profiles = {profile("z", "z"), profile("z_stripped", "z_stripped")};
  c.gaps = {{"z", "z_stripped", 0.3}};
  return {c};
}

std::vector<ExperimentConfig> nonlinear_chain() {
  auto c = base("nonlinear-chain", ProblemKind::nonlinear, 1.0, 2.0, 1.0, 0.0);
  c.datum.kind = "gaussian";
  c.nonlinear = {-1.0, 3.0, 0.1};
  auto u0 = profile("U0", "U0");
  u0.expected_slope = -1.0;
  auto u1 = profile("U1", "U1");
  u1.max_slope = -1.5;
  c.profiles = {u0, u1};
  c.gaps = {{"U1", "U0", 0.5}};
  return {c};
}

std::vector<ExperimentConfig> limit_profile() {
  auto c = base("limit-profile", ProblemKind::limit_profile, 1.0, 1.0, 1.0, 0.0);
  c.datum.kind = "gaussian";
  c.nonlinear = {-1.0, 3.0, 0.1};
  c.profiles = {profile("v", "v")};
  return {c};
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"linear-rate", "linear-sup",      "inhomogeneous", "convection",
          "nonlinear-chain", "limit-profile", "acceptance"};
}

std::vector<ExperimentConfig> preset(const std::string& name) {
  if (name == "linear-rate") return linear_rate();
  if (name == "linear-sup") return linear_sup();
  if (name == "inhomogeneous") return inhomogeneous();
  if (name == "convection") return convection();
  if (name == "nonlinear-chain") return nonlinear_chain();
  if (name == "limit-profile") return limit_profile();
  if (name == "acceptance") {
    std::vector<ExperimentConfig> all;
    for (auto part : {linear_rate(), inhomogeneous(), convection(), nonlinear_chain()})
      all.insert(all.end(), part.begin(), part.end());
    return all;
  }
  throw ConfigError("unknown preset \"" + name + "\"");
}

}  // namespace fracdiff
