#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/expansion.hpp"
#include "fracdiff/harness.hpp"
#include "fracdiff/kernel_cache.hpp"
#include "fracdiff/parallel.hpp"

namespace fd = fracdiff;

namespace {

struct Selection {
  std::string config;
  std::string preset;
  double tolerance = -1.0;
};

std::vector<fd::ExperimentConfig> select(const Selection& s) {
  if (s.config.empty() == s.preset.empty())
    throw fd::ConfigError("give exactly one of --config and --preset");
  auto configs = s.config.empty() ? fd::preset(s.preset) : fd::load_experiments(s.config);
  if (s.tolerance > 0.0)
    for (auto& c : configs) c.slope_tolerance = s.tolerance;
  return configs;
}

void add_selection(CLI::App* cmd, Selection& s) {
  cmd->add_option("--config", s.config, "experiment JSON (object or array)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", s.preset, "named experiment batch");
  cmd->add_option("--tolerance", s.tolerance, "slope tolerance override");
}

int kernel_cmd(double theta, int alpha, int m, double z_max, int points, const std::string& out) {
  auto profile = fd::KernelLibrary::shared().get(theta, alpha, m);
  std::ostringstream os;
  os << "z,P\n";
  char buf[64];
  for (int i = 0; i < points; ++i) {
    const double z = z_max * i / (points - 1);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", z, profile->profile(z));
    os << buf;
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << os.str();
  }
  std::cerr << "theta=" << theta << " alpha=" << alpha << " m=" << m
            << " mass=" << profile->mass() << " tail_exponent=" << profile->tail_exponent()
            << " tail_coefficient=" << profile->tail_coefficient() << "\n";
  return 0;
}

fd::Solution run_solver(const fd::ExperimentConfig& c, const fd::Field& phi) {
  const int A = c.expansion().max_alpha();
  switch (c.kind) {
    case fd::ProblemKind::linear:
      return fd::solve_linear(phi, c.forcing.forcing(c.theta), c.times, c.solver, A);
    case fd::ProblemKind::convection:
      return fd::solve_linear(phi, c.forcing.divergence(c.theta), c.times, c.solver, A + 1);
    default:
      return fd::solve_nonlinear(phi, c.nonlinear, c.times, c.solver, A);
  }
}

int solve_cmd(const Selection& s, const std::filesystem::path& out) {
  for (const auto& c : select(s)) {
    c.validate();
    const auto sol = run_solver(c, c.datum.sample());
    fd::write_trajectory(sol.u, out / c.id);
    std::cout << c.id << ": " << sol.u.size() << " slices -> " << (out / c.id).string() << "\n";
  }
  return 0;
}

int expand_cmd(const Selection& s, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  for (const auto& c : select(s)) {
    c.validate();
    if (c.kind != fd::ProblemKind::linear)
      throw fd::ConfigError("expand supports linear experiments");
    const auto phi = c.datum.sample();
    const auto spec = c.expansion();
    const double t = c.times.back();
    const auto sol = run_solver(c, phi);
    const auto coef = fd::moment_coefficients(fd::initial_moments(phi, spec.max_alpha()),
                                              c.forcing.empty() ? nullptr : &sol.ledger, spec, t);
    const auto grid = fd::output_grid(c.solver, t);
    std::ofstream f(out / (c.id + ".expansion.json"));
    if (!f) throw std::runtime_error("cannot write " + (out / (c.id + ".expansion.json")).string());
    f << fd::expansion_report_json(spec, coef, t, grid, c.weight()) << "\n";
    fd::write_field_csv(fd::evaluate_expansion(coef, c.theta, t, grid), out / (c.id + ".w.csv"));
    std::cout << c.id << ": " << coef.values.size() << " terms at t=" << t << "\n";
  }
  return 0;
}

int print_summary(const std::vector<fd::RateReport>& reports) {
  bool ok = true;
  for (const auto& r : reports) {
    for (const auto& s : r.series)
      std::cout << r.config.id << " " << s.label << " slope=" << s.slope << " "
                << s.verdict << " (" << s.detail << ")\n";
    for (const auto& g : r.gaps)
      std::cout << r.config.id << " gap " << g.check.shallower << " - " << g.check.steeper << " = "
                << g.gap << (g.pass ? " pass" : " fail") << " (>= " << g.check.min_gap << ")\n";
    if (r.partial) std::cout << r.config.id << " partial: " << r.message << "\n";
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

int verify_cmd(const Selection& s, const std::filesystem::path& out, unsigned jobs) {
  const auto reports = fd::run_batch(select(s), jobs);
  fd::emit_report(reports, out);
  return print_summary(reports);
}

int report_cmd(const std::filesystem::path& in, const std::filesystem::path& out) {
  std::ifstream f(in / "index.json");
  if (!f) throw std::runtime_error("cannot open " + (in / "index.json").string());
  std::stringstream ss;
  ss << f.rdbuf();
  const auto reports = fd::reports_from_index_json(ss.str());
  fd::emit_report(reports, out);
  return print_summary(reports);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fractional diffusion kernels, solvers and asymptotic profiles"};
  app.require_subcommand(1);
  unsigned jobs = 1;
  std::string out = "fracdiff-out";
  app.add_option("--jobs", jobs, "experiments run concurrently")->check(CLI::PositiveNumber);

  double theta = 1.0, z_max = 20.0;
  int alpha = 0, m = 0, points = 201;
  std::string kernel_out;
  auto* kernel = app.add_subcommand("kernel", "tabulate and print a kernel profile");
  kernel->add_option("--theta", theta)->check(CLI::Range(0.0, 2.0));
  kernel->add_option("--alpha", alpha)->check(CLI::NonNegativeNumber);
  kernel->add_option("--m", m)->check(CLI::NonNegativeNumber);
  kernel->add_option("--z-max", z_max);
  kernel->add_option("--points", points)->check(CLI::Range(2, 1000000));
  kernel->add_option("--out", kernel_out, "CSV file (stdout if omitted)");

  Selection sel;
  auto* solve = app.add_subcommand("solve", "run the solver and store trajectories");
  auto* expand = app.add_subcommand("expand", "coefficients and profile at the last time");
  auto* verify = app.add_subcommand("verify", "full rate study with CSV/JSON reports");
  for (auto* cmd : {solve, expand, verify}) {
    add_selection(cmd, sel);
    cmd->add_option("--out", out, "output directory");
  }
  std::string in;
  auto* report = app.add_subcommand("report", "re-emit CSVs from a stored index.json");
  report->add_option("--in", in, "directory holding index.json")->required();
  report->add_option("--out", out, "output directory");
  auto* presets = app.add_subcommand("presets", "list preset names");

  CLI11_PARSE(app, argc, argv);
  try {
    fd::set_num_threads(std::max(1u, std::thread::hardware_concurrency() / std::max(1u, jobs)));
    if (*kernel) return kernel_cmd(theta, alpha, m, z_max, points, kernel_out);
    if (*solve) return solve_cmd(sel, out);
    if (*expand) return expand_cmd(sel, out);
    if (*verify) return verify_cmd(sel, out, jobs);
    if (*report) return report_cmd(in, out);
    if (*presets) {
      for (const auto& name : fd::preset_names()) std::cout << name << "\n";
      return 0;
    }
  } catch (const fd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
