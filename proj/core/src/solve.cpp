#include <algorithm>
#include <cmath>
#include <sstream>

#include "fracdiff/errors.hpp"
#include "fracdiff/kernel_cache.hpp"
#include "fracdiff/numerics.hpp"
#include "fracdiff/parallel.hpp"
#include "fracdiff/propagator.hpp"
#include "fracdiff/semigroup.hpp"

namespace fracdiff {

namespace {

// Direct quadrature sum_j w_j phi_j K(x - y_j, t) at the given points.
void direct_sum(const Field& phi, double t, const KernelProfile& kernel,
                std::span<const double> x, std::span<double> out) {
  const Grid& g = phi.grid();
  const double h = g.spacing();
  const double scale = std::pow(t, -1.0 / kernel.theta());
  const double pref = std::pow(t, -(kernel.dim() + kernel.alpha()) / kernel.theta() - kernel.m());
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < phi.size(); ++j)
    if (phi[j] != 0.0) support.push_back(j);
  parallel_for(0, x.size(), [&](std::size_t i) {
    double sum = 0.0;
    for (std::size_t j : support) {
      const double w = (j == 0 || j + 1 == phi.size()) ? 0.5 * h : h;
      sum += w * phi[j] * kernel.profile(scale * (x[i] - g.x(j)));
    }
    out[i] = pref * sum;
  });
}

}  // namespace

Field apply_semigroup(const Field& phi, double t, const Grid& target, const KernelProfile& kernel) {
  if (!(t >= 0.0)) throw ConfigError("apply_semigroup needs t >= 0");
  if (kernel.dim() != 1) throw ConfigError("apply_semigroup supports dim = 1 only");
  const bool plain = kernel.alpha() == 0 && kernel.m() == 0;
  if (t == 0.0) {
    if (!plain) throw ConfigError("derivative kernels are singular at t = 0");
    return phi.resample(target);
  }
  const double h = phi.grid().spacing();
  const double width = std::pow(t, 1.0 / kernel.theta());
  const auto x = target.nodes();
  std::vector<double> out(x.size());

  if (width >= 4.0 * h) {
    direct_sum(phi, t, kernel, x, out);
  } else {
    if (!plain)
      throw NumericalError("kernel derivative narrower than the grid of the datum; refine phi");
    // Band-limited Toeplitz step on phi's grid widened by a margin, direct
    // quadrature for target points beyond the margin.
    const std::size_t pad = 16 + static_cast<std::size_t>(std::ceil(8.0 * width / h));
    const std::size_t n = phi.size() + 2 * pad;
    const Grid wide(phi.grid().half_width + static_cast<double>(pad) * h, n);
    std::vector<double> src(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      src[i] = (i >= pad && i < pad + phi.size()) ? phi[i - pad] : phi.interpolate(wide.x(i));
    ToeplitzConvolver conv(n, n, 0);
    const auto w = bandlimited_weights(kernel, t / std::pow(h, kernel.theta()), conv.max_lag());
    std::vector<double> res(n);
    conv.apply(conv.transform(w), src, res);
    const Field near(wide, std::move(res));
    const double inner = wide.half_width - 4.0 * h;
    std::vector<double> far_x;
    std::vector<std::size_t> far_i;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (std::abs(x[i]) <= inner) {
        out[i] = near.interpolate(x[i]);
      } else {
        far_x.push_back(x[i]);
        far_i.push_back(i);
      }
    }
    std::vector<double> far_v(far_x.size());
    direct_sum(phi, t, kernel, far_x, far_v);
    for (std::size_t k = 0; k < far_i.size(); ++k) out[far_i[k]] = far_v[k];
  }
  Field result(target, std::move(out));
  if (plain) result.tail_exponent = kernel.dim() + kernel.theta();
  return result;
}

Field apply_semigroup(const Field& phi, double t, const SolverConfig& config) {
  config.validate();
  const auto kernel = KernelLibrary::shared().get(config.theta, 0, 0, config.dim);
  return apply_semigroup(phi, t, output_grid(config, t), *kernel);
}

namespace {

using Sink = std::function<void(MomentLedger::Entry)>;
using StepFn = std::function<std::vector<double>(const EpochBox&, std::span<const double> state,
                                                 double t, double tau, const Sink& sink)>;

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

std::size_t half_cells(const SolverConfig& c) {
  const auto m = static_cast<std::size_t>(c.box_factor) * static_cast<std::size_t>(c.cells_per_scale);
  return m + (m % 2);
}

std::vector<double> padded_moments(const Grid& grid, std::span<const double> values, int max_alpha,
                                   std::optional<double> tail_exponent) {
  Field f(grid, std::vector<double>(values.begin(), values.end()));
  f.tail_exponent = tail_exponent;
  std::vector<double> m(static_cast<std::size_t>(max_alpha + 1));
  for (int a = 0; a <= max_alpha; ++a) m[static_cast<std::size_t>(a)] = moment_estimate(f, a).value;
  return m;
}

void check_times(std::span<const double> times) {
  if (times.empty()) throw ConfigError("no sample times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0) || !std::isfinite(times[i]))
      throw ConfigError("sample times must be finite and >= 0");
    if (i && !(times[i] > times[i - 1])) throw ConfigError("sample times must increase");
  }
}

// Epoch k spans diffusion scales [2^k, 2^{k+1}], i.e. t in [2^{k theta} - 1, 2^{(k+1) theta} - 1].
SpaceTimeField march(const std::function<double(double)>& initial, std::span<const double> times,
                     const SolverConfig& config, int steps, const StepFn& step,
                     MomentLedger& ledger) {
  EpochBox box(config.theta, 1.0, half_cells(config), config.cells_per_scale);
  std::vector<double> state(box.grid().size);
  for (std::size_t i = 0; i < state.size(); ++i) state[i] = initial(box.grid().x(i));

  SpaceTimeField out;
  const double tail = config.dim + config.theta;
  auto emit = [&](double t, const EpochBox& b, std::vector<double> values) {
    Field f(b.grid(), std::move(values));
    f.tail_exponent = tail;
    Field r = f.resample(output_grid(config, t));
    r.tail_exponent = tail;
    out.push_back(t, std::move(r));
  };
  const Sink main_sink = [&](MomentLedger::Entry e) { ledger.add(std::move(e)); };
  const Sink side_sink = [&](MomentLedger::Entry e) { ledger.add_side(std::move(e)); };

  std::size_t j = 0;
  while (j < times.size() && times[j] == 0.0) emit(0.0, box, state), ++j;
  double last_good = 0.0;
  for (int k = 0; j < times.size(); ++k) {
    const double t0 = std::pow(2.0, k * config.theta) - 1.0;
    const double t1 = std::pow(2.0, (k + 1) * config.theta) - 1.0;
    const double dt = (t1 - t0) / steps;
    for (int n = 0; n < steps && j < times.size(); ++n) {
      const double tn = t0 + n * dt;
      const double tn1 = n + 1 == steps ? t1 : t0 + (n + 1) * dt;
      while (j < times.size() && times[j] < tn1 && !same_time(times[j], tn1)) {
        emit(times[j], box, step(box, state, tn, times[j] - tn, side_sink));
        ++j;
      }
      state = step(box, state, tn, tn1 - tn, main_sink);
      double sup = 0.0;
      for (double v : state) sup = std::max(sup, std::abs(v));
      if (!(sup <= config.blowup_cap)) {
        std::ostringstream os;
        os << "solution sup norm " << sup << " exceeded the cap " << config.blowup_cap
           << " near t = " << tn1;
        throw SolverAbort(os.str(), last_good);
      }
      last_good = tn1;
      while (j < times.size() && same_time(times[j], tn1)) emit(times[j], box, state), ++j;
    }
    if (j < times.size()) {
      state = box.remesh(state, t1);
      box = box.next();
    }
  }
  return out;
}

StepFn linear_step(const Forcing& f, DuhamelRule rule, int max_alpha) {
  return [&f, rule, max_alpha](const EpochBox& box, std::span<const double> state, double t,
                               double tau, const Sink& sink) {
    const Grid& pg = box.padded_grid();
    std::vector<double> pad(pg.size);
    box.fill_padded(state, t, pad);
    std::vector<std::vector<double>> forcing;
    std::vector<double> taus{tau};
    std::vector<double> nodes, weights;
    if (rule == DuhamelRule::midpoint) {
      nodes = {0.5};
      weights = {1.0};
    } else {
      const double d = std::sqrt(3.0) / 6.0;
      nodes = {0.5 - d, 0.5 + d};
      weights = {0.5, 0.5};
    }
    for (std::size_t g = 0; g < nodes.size(); ++g) {
      const double s = t + tau * nodes[g];
      std::vector<double> v(pg.size);
      for (std::size_t i = 0; i < pg.size; ++i) v[i] = f.f(pg.x(i), s);
      sink({t, t + tau, s, tau * weights[g], padded_moments(pg, v, max_alpha, f.tail_exponent)});
      for (double& x : v) x *= tau * weights[g];
      forcing.push_back(std::move(v));
      taus.push_back(tau * (1.0 - nodes[g]));
    }
    std::vector<std::span<const double>> sources{pad};
    for (const auto& v : forcing) sources.emplace_back(v);
    std::vector<double> tails(sources.size(), f.tail_exponent.value_or(0.0));
    tails[0] = 1.0 + box.theta();
    std::vector<double> next(state.size());
    box.propagate(taus, sources, next, tails);
    return next;
  };
}

StepFn nonlinear_step(const NonlinearSpec& nl, int max_alpha) {
  return [&nl, max_alpha](const EpochBox& box, std::span<const double> state, double t, double tau,
                          const Sink& sink) {
    const Grid& pg = box.padded_grid();
    std::vector<double> pad(pg.size), src(pg.size);
    box.fill_padded(state, t, pad);
    for (std::size_t i = 0; i < pg.size; ++i) src[i] = pad[i] + 0.5 * tau * nl(pad[i]);
    std::vector<double> pred(state.size());
    {
      const double taus[] = {0.5 * tau};
      const std::span<const double> sources[] = {src};
      const double tails[] = {1.0 + box.theta()};
      box.propagate(taus, sources, pred, tails);
    }
    box.fill_padded(pred, t + 0.5 * tau, src);
    for (double& v : src) v = nl(v);
    const double tail = nl.p * (1.0 + box.theta());
    sink({t, t + tau, t + 0.5 * tau, tau, padded_moments(pg, src, max_alpha, tail)});
    for (double& v : src) v *= tau;
    std::vector<double> next(state.size());
    const double taus[] = {tau, 0.5 * tau};
    const std::span<const double> sources[] = {pad, src};
    const double tails[] = {1.0 + box.theta(), tail};
    box.propagate(taus, sources, next, tails);
    return next;
  };
}

double relative_difference(const SpaceTimeField& a, const SpaceTimeField& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Field& x = a.slice(k);
    const Field& y = b.slice(k);
    double diff = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) diff = std::max(diff, std::abs(x[i] - y[i]));
    const double scale = y.max_abs();
    if (scale > 0.0) worst = std::max(worst, diff / scale);
  }
  return worst;
}

}  // namespace

Solution solve_linear(const Field& phi, const Forcing& f, std::span<const double> times,
                      const SolverConfig& config, int max_alpha) {
  config.validate();
  check_times(times);
  if (max_alpha < 0) throw ConfigError("max_alpha must be >= 0");
  Solution sol;
  sol.ledger = MomentLedger(max_alpha);
  sol.steps_per_epoch = config.steps_per_epoch;
  SpaceTimeField stepped;
  if (!f.empty()) {
    stepped = march([](double) { return 0.0; }, times, config, config.steps_per_epoch,
                    linear_step(f, config.rule, max_alpha), sol.ledger);
  }
  const auto kernel = KernelLibrary::shared().get(config.theta, 0, 0, config.dim);
  for (std::size_t j = 0; j < times.size(); ++j) {
    const Grid grid = output_grid(config, times[j]);
    Field u = phi.size() ? apply_semigroup(phi, times[j], grid, *kernel) : Field::zeros(grid);
    if (!f.empty()) u += stepped.slice(j);
    u.tail_exponent = config.dim + config.theta;
    sol.u.push_back(times[j], std::move(u));
  }
  return sol;
}

Field duhamel(const Forcing& f, double t, const SolverConfig& config) {
  if (!(t > 0.0)) {
    if (t == 0.0) return Field::zeros(output_grid(config, 0.0));
    throw ConfigError("duhamel needs t >= 0");
  }
  const double times[] = {t};
  return solve_linear(Field(), f, times, config).u.slice(0);
}

Field duhamel(const SpaceTimeField& f, double t, const SolverConfig& config) {
  if (f.empty() || f.times().front() > 0.0 || f.times().back() < t)
    throw ConfigError("forcing trajectory must cover [0, t]");
  return duhamel(Forcing::from_trajectory(f), t, config);
}

Solution solve_nonlinear(const Field& phi, const NonlinearSpec& nl, std::span<const double> times,
                         const SolverConfig& config, int max_alpha) {
  config.validate();
  nl.validate(config.theta, config.dim);
  check_times(times);
  if (phi.size() == 0) throw ConfigError("nonlinear solve needs an initial datum");
  if (nl.lambda == 0.0) {
    Solution sol = solve_linear(phi, Forcing{}, times, config, max_alpha);
    return sol;
  }
  const auto initial = [&phi](double x) { return phi.interpolate(x); };
  auto run = [&](int steps, MomentLedger& ledger) {
    return march(initial, times, config, steps, nonlinear_step(nl, max_alpha), ledger);
  };

  Solution sol;
  sol.steps_per_epoch = config.steps_per_epoch;
  sol.ledger = MomentLedger(max_alpha);
  sol.u = run(sol.steps_per_epoch, sol.ledger);
  sol.converged = config.max_doublings == 0;
  for (int d = 0; d < config.max_doublings; ++d) {
    MomentLedger finer(max_alpha);
    SpaceTimeField u = run(2 * sol.steps_per_epoch, finer);
    const double diff = relative_difference(sol.u, u);
    sol.u = std::move(u);
    sol.ledger = std::move(finer);
    sol.steps_per_epoch *= 2;
    if (diff < 0.5 * config.tolerance) {
      sol.converged = true;
      break;
    }
  }
  if (!sol.converged) {
    std::ostringstream os;
    os << "step doubling did not reach tolerance " << config.tolerance << " with "
       << sol.steps_per_epoch << " steps per epoch";
    warn(os.str());
  }
  return sol;
}

}  // namespace fracdiff
