#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/kernel.hpp"
#include "fracdiff/kernel_cache.hpp"
#include "fracdiff/numerics.hpp"
#include "oracles.hpp"

using namespace fracdiff;

namespace {

std::shared_ptr<const KernelProfile> kernel(double theta, int alpha = 0, int m = 0, int dim = 1) {
  return KernelLibrary::shared().get(theta, alpha, m, dim);
}

}  // namespace

TEST_CASE("closed forms at the origin and one") {
  CHECK(kernel(2.0)->profile(0.0) == doctest::Approx(1.0 / std::sqrt(4.0 * oracle::pi)).epsilon(1e-10));
  CHECK(kernel(1.0)->profile(0.0) == doctest::Approx(1.0 / oracle::pi).epsilon(1e-10));
  for (double z : {0.3, 1.0, 2.5, 7.0, 40.0, 300.0})
    CHECK(kernel(1.0)->profile(z) ==
          doctest::Approx(1.0 / (oracle::pi * (1.0 + z * z))).epsilon(1e-8));
}

TEST_CASE("theta = 1.5 value at the origin") {
  const double expected = std::tgamma(1.0 + 1.0 / 1.5) / oracle::pi;
  CHECK(oracle::stable_profile(1.5, 0, 0, 0.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(kernel(1.5)->profile(0.0) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(expected == doctest::Approx(0.28731).epsilon(1e-4));
}

TEST_CASE("profiles agree with direct Fourier quadrature") {
  for (double theta : {0.5, 1.5})
    for (int alpha = 0; alpha <= 2; ++alpha)
      for (int m = 0; m <= 1; ++m) {
        const auto P = kernel(theta, alpha, m);
        for (double z : {0.0, 0.4, 1.3, 3.0, 6.0}) {
          CAPTURE(theta);
          CAPTURE(alpha);
          CAPTURE(m);
          CAPTURE(z);
          CHECK(std::abs(P->profile(z) - oracle::stable_profile(theta, alpha, m, z)) <= 1e-8);
        }
      }
}

TEST_CASE("derivative evaluation examples") {
  CHECK(eval_kernel_derivative(*kernel(1.0), 0.0, 4.0) ==
        doctest::Approx(1.0 / (4.0 * oracle::pi)).epsilon(1e-10));
  for (double theta : {0.5, 1.0, 1.5, 2.0})
    for (double t : {0.5, 3.0}) CHECK(std::abs(eval_kernel_derivative(*kernel(theta, 1), 0.0, t)) <= 1e-14);
  CHECK(eval_kernel_derivative(*kernel(2.0, 0, 1), 0.0, 1.0) ==
        doctest::Approx(-0.5 / std::sqrt(4.0 * oracle::pi)).epsilon(1e-9));
  CHECK_THROWS_AS(eval_kernel_derivative(*kernel(1.0), 0.0, 0.0), ConfigError);
}

TEST_CASE("gaussian derivatives against Hermite sums") {
  double worst = 0.0;
  for (int alpha = 0; alpha <= 3; ++alpha)
    for (int m = 0; m <= 2; ++m) {
      const auto P = kernel(2.0, alpha, m);
      for (double t : {0.5, 1.0, 4.0})
        for (double x = -6.0; x <= 6.0; x += 0.37)
          worst = std::max(worst, std::abs((*P)(x, t) - oracle::gauss_derivative(alpha, m, x, t)));
    }
  CHECK(worst <= 1e-8);
}

TEST_CASE("closed form oracle") {
  CHECK(closed_form_oracle(2.0, 1, 0.0, 1.0) == doctest::Approx(0.2820948).epsilon(1e-6));
  CHECK(closed_form_oracle(1.0, 1, 1.0, 1.0) == doctest::Approx(1.0 / (2.0 * oracle::pi)).epsilon(1e-12));
  CHECK(closed_form_oracle(1.0, 2, 0.0, 1.0) == doctest::Approx(1.0 / (2.0 * oracle::pi)).epsilon(1e-12));
  for (double x : {-3.0, 0.0, 2.0})
    for (double t : {0.5, 2.0}) {
      CHECK(closed_form_oracle(2.0, 1, x, t) == doctest::Approx(oracle::gauss(x, t)).epsilon(1e-13));
      CHECK(closed_form_oracle(1.0, 1, x, t) == doctest::Approx(oracle::poisson(x, t)).epsilon(1e-13));
    }
  CHECK_THROWS_AS(closed_form_oracle(1.5, 1, 0.0, 1.0), ConfigError);
}

TEST_CASE("tabulated kernels match the closed forms on |x| <= 20") {
  double worst = 0.0;
  for (double t : {0.5, 1.0, 4.0})
    for (double x = -20.0; x <= 20.0; x += 0.01) {
      worst = std::max(worst, std::abs(eval_kernel_derivative(*kernel(1.0), x, t) - oracle::poisson(x, t)));
      worst = std::max(worst, std::abs(eval_kernel_derivative(*kernel(2.0), x, t) - oracle::gauss(x, t)));
    }
  CHECK(worst <= 1e-8);
}

TEST_CASE("kernel shape: positive, even, decreasing") {
  for (double theta : {0.5, 1.0, 1.5, 2.0}) {
    const auto P = kernel(theta);
    const double top = P->profile(0.0);
    const double noise = theta < 2.0 ? 0.0 : 1e-15 * top;
    double prev = top;
    bool ok = top > 0.0;
    for (double z : P->z_nodes()) {
      const double v = P->profile(z);
      ok = ok && (v > 0.0 || v >= -noise) && v <= prev + noise && v == P->profile(-z);
      prev = v;
    }
    CAPTURE(theta);
    CHECK(ok);
  }
}

TEST_CASE("unit mass and power tail") {
  for (double theta : {0.5, 1.0, 1.5}) {
    const auto P = kernel(theta);
    CAPTURE(theta);
    CHECK(std::abs(P->mass() - 1.0) <= 1e-4);

    std::vector<double> lz, lp;
    const auto z = P->z_nodes();
    for (std::size_t i = 0; i < z.size(); ++i)
      if (z[i] >= 100.0) {
        lz.push_back(std::log(z[i]));
        lp.push_back(std::log(P->values()[i]));
      }
    CHECK(std::abs(fit_line(lz, lp).slope + (1.0 + theta)) <= 0.05);
  }
  const double mass = oracle::integrate_line([](double x) { return kernel(1.5)->profile(x); });
  CHECK(std::abs(mass - 1.0) <= 1e-4);
}

TEST_CASE("decay envelope of derivative profiles") {
  for (double theta : {0.5, 1.0, 1.5})
    for (int alpha = 0; alpha <= 2; ++alpha)
      for (int m = 0; m <= 2; ++m) {
        const auto P = kernel(theta, alpha, m);
        const double e = 1.0 + theta * std::max(m, 1) + alpha;
        CHECK(P->tail_exponent() == doctest::Approx(e));
        const auto z = P->z_nodes();
        const double z_far = z.back() / 10.0, z_mid = z.back() / 100.0;
        double sup = 0.0, mid = 0.0, far = 0.0;
        for (double x : z) {
          const double v = std::abs(P->profile(x)) * std::pow(1.0 + x, e);
          sup = std::max(sup, v);
          if (x >= z_far) far = std::max(far, v);
          else if (x >= z_mid) mid = std::max(mid, v);
        }
        CAPTURE(theta);
        CAPTURE(alpha);
        CAPTURE(m);
        CHECK(std::isfinite(sup));
        CHECK(far <= 1.1 * mid);
      }
}

TEST_CASE("scaling consistency") {
  for (double theta : {0.5, 1.0, 1.5})
    for (int alpha = 0; alpha <= 2; ++alpha)
      for (int m = 0; m <= 1; ++m) {
        const auto P = kernel(theta, alpha, m);
        for (double lambda : {2.0, 10.0})
          for (double x : {0.1, 0.8, 3.0}) {
            const double t = 0.7;
            const double a = (*P)(x, t);
            const double b = (*P)(std::pow(lambda, 1.0 / theta) * x, lambda * t) *
                             std::pow(lambda, (1.0 + alpha) / theta + m);
            CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
          }
      }
}

TEST_CASE("semigroup law by direct convolution") {
  for (double theta : {0.5, 1.0, 1.5}) {
    const auto P = kernel(theta);
    double worst = 0.0;
    for (auto [s, r] : {std::pair{0.5, 0.5}, std::pair{1.0, 3.0}})
      for (double x : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        const double conv =
            oracle::integrate_line([&](double y) { return (*P)(x - y, r) * (*P)(y, s); });
        worst = std::max(worst, std::abs(conv - (*P)(x, s + r)));
      }
    CAPTURE(theta);
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("two-dimensional radial kernel") {
  const auto P = kernel(1.0, 0, 0, 2);
  for (double r : {0.0, 0.5, 2.0})
    CHECK(eval_kernel_derivative(*P, r, 1.0) == doctest::Approx(closed_form_oracle(1.0, 2, r, 1.0)).epsilon(1e-7));
}

TEST_CASE("rejected parameters") {
  CHECK_THROWS_AS(tabulate_profile({0.0}), ConfigError);
  CHECK_THROWS_AS(tabulate_profile({2.5}), ConfigError);
  ProfileKey bad;
  bad.dim = 3;
  CHECK_THROWS_AS(tabulate_profile(bad), ConfigError);
}

TEST_CASE("profile cache round trip") {
  const auto P = kernel(1.5, 1, 0);
  const auto path = std::filesystem::temp_directory_path() / "fracdiff-profile-test.json";
  save_profile(*P, path);
  const auto Q = load_profile(path);
  std::filesystem::remove(path);
  CHECK(Q.key() == P->key());
  CHECK(Q.tail_coefficient() == P->tail_coefficient());
  REQUIRE(Q.size() == P->size());
  bool same = true;
  for (std::size_t i = 0; i < Q.size(); ++i) same = same && Q.values()[i] == P->values()[i];
  CHECK(same);
}
