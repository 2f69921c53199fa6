#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "fracdiff/errors.hpp"
#include "fracdiff/harness.hpp"
#include "fracdiff/kernel_cache.hpp"
#include "fracdiff/parallel.hpp"

namespace fracdiff {

namespace {

double inverse(double q) { return std::isinf(q) ? 0.0 : 1.0 / q; }

std::string q_str(double q) {
  std::ostringstream os;
  if (std::isinf(q)) os << "inf";
  else os << q;
  return os.str();
}

void finish(BoundednessReport& r) {
  r.max_ratio = 0.0;
  bool finite = true;
  for (const auto& s : r.samples) {
    if (!std::isfinite(s.ratio)) finite = false;
    r.max_ratio = std::max(r.max_ratio, s.ratio);
  }
  r.pass = finite && !r.samples.empty() && r.max_ratio <= r.cap;
}

}  // namespace

BoundednessReport semigroup_derivative_suite(double theta, double cap) {
  if (!(theta > 0.0 && theta <= 2.0)) throw ConfigError("theta must lie in (0, 2]");
  BoundednessReport report;
  report.name = "semigroup derivatives";
  report.cap = cap;

  const double qs[] = {1.0, 2.0, kInf};
  const double ells[] = {0.0, 0.5, 1.0, 1.5};
  const double ts[] = {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0};
  const double width = 0.5;

  struct Case {
    double t;
    int alpha, m;
  };
  std::vector<Case> cases;
  for (double t : ts)
    for (int alpha = 0; alpha <= 2; ++alpha)
      for (int m = 0; m <= 1; ++m) cases.push_back({t, alpha, m});

  std::mutex mutex;
  parallel_for(0, cases.size(), [&](std::size_t i) {
    const auto [t, alpha, m] = cases[i];
    const double scale = std::pow(t, 1.0 / theta);
    const double h = std::min(width / 32.0, scale / 8.0);
    const Field phi = Field::sample(Grid::with_spacing(12.0 * width, h), [&](double x) {
      return std::exp(-0.5 * x * x / (width * width));
    });
    const auto kernel = KernelLibrary::shared().get(theta, alpha, m);
    const double reach = std::max(scale, width);
    const Grid target = Grid::with_spacing(64.0 * reach, reach / 16.0);
    Field v = apply_semigroup(phi, t, target, *kernel);
    const int mp = std::max(m, 1);
    v.tail_exponent = 1.0 + theta * mp + alpha;

    std::vector<RatioSample> local;
    for (double q : qs)
      for (double r : qs) {
        if (r < q) continue;
        for (double ell : ells) {
          if (!(ell < theta * mp + alpha + (inverse(q) - inverse(r)))) continue;
          const double lhs = std::pow(t, (inverse(q) - inverse(r)) / theta + alpha / theta + m) *
                             weighted_norm(v, {r, ell, ell});
          const double rhs = std::pow(t, ell / theta) * weighted_norm(phi, {q, 0.0, ell}) +
                             weighted_norm(phi, {q, ell, ell});
          std::ostringstream label;
          label << "q=" << q_str(q) << " r=" << q_str(r) << " alpha=" << alpha << " m=" << m
                << " ell=" << ell;
          local.push_back({label.str(), t, lhs / rhs});
        }
      }
    std::lock_guard lock(mutex);
    report.samples.insert(report.samples.end(), local.begin(), local.end());
  });
  std::sort(report.samples.begin(), report.samples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.label, a.t) < std::tie(b.label, b.t);
  });
  finish(report);
  return report;
}

BoundednessReport forcing_interpolation_suite(const SpaceTimeField& f, double K, double q,
                                              double theta, double cap) {
  if (!(q >= 1.0)) throw ConfigError("q must be >= 1");
  if (!(K >= 0.0)) throw ConfigError("K must be >= 0");
  BoundednessReport report;
  report.name = "forcing interpolation";
  report.cap = cap;
  std::vector<double> rs;
  for (double r : {1.0, 2.0, 4.0, kInf})
    if (r <= q) rs.push_back(r);
  const double ells[] = {0.0, 0.5 * K, K};
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double t = f.times()[k];
    if (!(t > 0.0)) continue;
    const Field& slice = f.slice(k);
    const double E = e_functional(slice, K, q, theta, 1, t);
    if (E == 0.0) continue;
    for (double r : rs)
      for (double ell : ells) {
        const double lhs = std::pow(t, (1.0 - inverse(r)) / theta) *
                           std::pow(t + 1.0, (K - ell) / theta) * weighted_norm(slice, {r, ell, K});
        std::ostringstream label;
        label << "r=" << q_str(r) << " ell=" << ell;
        report.samples.push_back({label.str(), t, lhs / E});
      }
  }
  finish(report);
  return report;
}

BoundednessReport decay_trend_suite(const SpaceTimeField& u, double K, double theta, double t_min,
                                    double t_max, double slack) {
  if (!(t_max > t_min)) throw ConfigError("decay trend needs t_min < t_max");
  BoundednessReport report;
  report.name = "decay trend";
  report.cap = 1.0 + slack;
  for (double q : {1.0, 2.0, kInf})
    for (double ell : {0.0, 0.5, 1.0, 2.0}) {
      if (ell > K || !(ell < theta + (1.0 - inverse(q)))) continue;
      std::ostringstream label;
      label << "q=" << q_str(q) << " ell=" << ell;
      double floor = kInf;
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double t = u.times()[k];
        if (t < t_min || t > t_max) continue;
        const double scaled = std::pow(t + 1.0, (1.0 - inverse(q)) / theta - ell / theta) *
                              weighted_norm(u.slice(k), {q, ell, ell});
        floor = std::min(floor, scaled);
        report.samples.push_back({label.str(), t, scaled / floor});
      }
    }
  finish(report);
  return report;
}

}  // namespace fracdiff
