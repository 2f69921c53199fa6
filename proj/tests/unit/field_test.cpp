#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "fracdiff/errors.hpp"
#include "fracdiff/field.hpp"
#include "oracles.hpp"

using namespace fracdiff;

namespace {

// Indicator of [a, b]; nodes sitting on a jump take the midpoint value.
Field indicator(double a, double b, double h = 1e-3, double half = 2.0) {
  return Field::sample(Grid::with_spacing(half, h), [=](double x) {
    const double eps = 1e-9 * h;
    if (std::abs(x - a) < eps || std::abs(x - b) < eps) return 0.5;
    return (x > a && x < b) ? 1.0 : 0.0;
  });
}

Field gaussian(double h = 1e-2, double half = 12.0) {
  return Field::sample(Grid::with_spacing(half, h), [](double x) { return std::exp(-x * x); });
}

std::filesystem::path scratch(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fracdiff-field-test-" + name);
}

}  // namespace

TEST_CASE("weighted norm examples") {
  const Field box = indicator(-1.0, 1.0);
  CHECK(weighted_norm(box, {1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(weighted_norm(box, {kInf, 0.0}) == 1.0);
  const Field unit = indicator(0.0, 1.0, 1e-4);
  CHECK(std::abs(weighted_norm(unit, {2.0, 1.0}) - 1.0 / std::sqrt(3.0)) <= 1e-4);
  CHECK(weighted_norm(Field::zeros(Grid(3.0, 101)), {2.0, 1.0}) == 0.0);
}

TEST_CASE("moment examples") {
  const Field box = indicator(-1.0, 1.0);
  CHECK(moment(box, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(moment(box, 1)) <= 1e-14);
  CHECK(moment(box, 2) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(moment(indicator(0.0, 1.0), 1) == doctest::Approx(0.5).epsilon(1e-6));

  const double root_pi = oracle::integrate_line([](double x) { return std::exp(-x * x); });
  CHECK(root_pi == doctest::Approx(1.7724539).epsilon(1e-7));
  CHECK(std::abs(moment(gaussian(), 0) - root_pi) <= 1e-12);
}

TEST_CASE("power tail continuation of moments") {
  Field p = Field::sample(Grid::with_spacing(50.0, 0.01),
                          [](double x) { return oracle::poisson(x, 1.0); });
  const Estimate cut = moment_estimate(p, 0);
  p.tail_exponent = 2.0;
  const Estimate full = moment_estimate(p, 0);
  CHECK(std::abs(cut.value - 1.0) > 1e-2);
  CHECK(std::abs(full.value - 1.0) <= 1e-4);
}

TEST_CASE("forcing functional examples") {
  const Field box = indicator(-1.0, 1.0, 1e-4);
  CHECK(e_functional(box, 1.0, kInf, 1.0, 1, 0.0) == doctest::Approx(3.0).epsilon(1e-6));
  const Field decayed = box * std::exp(-1.0);
  CHECK(e_functional(decayed, 1.0, 1.0, 1.0, 1, 1.0) == doctest::Approx(10.0 / std::exp(1.0)).epsilon(1e-6));
  CHECK(e_functional(Field::zeros(Grid(4.0, 81)), 1.0, 2.0, 1.5, 1, 3.0) == 0.0);
}

TEST_CASE("time weighted moment integrals") {
  std::vector<double> times, moments;
  for (double s = 0.0; s <= 60.0 + 1e-12; s += 0.02) {
    times.push_back(s);
    moments.push_back(2.0 * std::exp(-s));
  }
  CHECK(time_weighted_moment_integral(times, moments, 0, kInf) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(time_weighted_moment_integral(times, moments, 1, kInf) == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(time_weighted_moment_integral(times, moments, 0, 1.0) ==
        doctest::Approx(2.0 * (1.0 - std::exp(-1.0))).epsilon(1e-8));

  const Field g = gaussian(0.05) * (2.0 / std::sqrt(oracle::pi));
  SpaceTimeField f, zero;
  for (double s = 0.0; s <= 40.0 + 1e-12; s += 0.05) {
    f.push_back(s, g * std::exp(-s));
    zero.push_back(s, Field::zeros(g.grid()));
  }
  CHECK(time_weighted_moment_integral(f, 0, 0, kInf) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(time_weighted_moment_integral(f, 0, 1, kInf) == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(time_weighted_moment_integral(zero, 0, 1, kInf) == 0.0);
}

TEST_CASE("homogeneity and linearity") {
  const Field a = gaussian();
  const Field b = Field::sample(a.grid(), [](double x) { return x * std::exp(-0.5 * x * x); });
  for (double c : {-3.5, 0.25, 7.0})
    for (WeightSpec w : {WeightSpec{1.0, 0.0}, WeightSpec{2.0, 1.0}, WeightSpec{kInf, 1.5}, WeightSpec{3.0, 0.5}}) {
      const double n = weighted_norm(a + b, w);
      CHECK(weighted_norm((a + b) * c, w) == doctest::Approx(std::abs(c) * n).epsilon(1e-14));
    }
  for (int alpha = 0; alpha <= 3; ++alpha) {
    const double lhs = moment(a * 2.0 - b * 0.5, alpha);
    const double rhs = 2.0 * moment(a, alpha) - 0.5 * moment(b, alpha);
    CHECK(std::abs(lhs - rhs) <= 1e-13 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("quadrature self-convergence under grid halving") {
  const auto f = [](double x) { return std::exp(-0.5 * (x - 0.3) * (x - 0.3)) * (1.0 + 0.2 * x); };
  const Field coarse = Field::sample(Grid::with_spacing(14.0, 0.02), f);
  const Field fine = Field::sample(Grid::with_spacing(14.0, 0.01), f);
  for (int alpha = 0; alpha <= 3; ++alpha)
    CHECK(std::abs(moment(coarse, alpha) - moment(fine, alpha)) <= 1e-8);
  // |x|^ell has a kink at the origin for ell = 1, so the trapezoid rule is second order there.
  for (WeightSpec w : {WeightSpec{1.0, 1.0}, WeightSpec{2.0, 2.0}})
    CHECK(std::abs(weighted_norm(coarse, w) - weighted_norm(fine, w)) <= 1e-4);
}

TEST_CASE("time interpolation is piecewise linear") {
  const Field g = gaussian(0.1, 6.0);
  SpaceTimeField f({1.0, 3.0}, {g, g * 3.0});
  const Field mid = f.at(2.0, g.grid());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(mid[i] == doctest::Approx(2.0 * g[i]).epsilon(1e-14));
}

TEST_CASE("csv and binary round trips") {
  Field f = Field::sample(Grid(5.0, 257), [](double x) { return std::sin(x) / (1.0 + x * x); });
  f.tail_exponent = 2.0;
  const auto csv = scratch("slice.csv");
  write_field_csv(f, csv);
  const Field c = read_field_csv(csv);
  CHECK(c.grid() == f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(c[i] == f[i]);

  const auto bin = scratch("slice.bin");
  write_field_binary(f, bin);
  const Field b = read_field_binary(bin);
  CHECK(b.grid() == f.grid());
  CHECK(b.tail_exponent == f.tail_exponent);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(b[i] == f[i]);
  std::filesystem::remove(csv);
  std::filesystem::remove(bin);
  CHECK_THROWS(read_field_binary(bin));
}

TEST_CASE("trajectory round trip") {
  SpaceTimeField f;
  f.push_back(0.5, Field::sample(Grid(4.0, 65), [](double x) { return std::exp(-x * x); }));
  f.push_back(2.0, Field::sample(Grid(8.0, 129), [](double x) { return 0.5 * std::exp(-x * x / 4.0); }));
  const auto dir = scratch("trajectory");
  std::filesystem::remove_all(dir);
  write_trajectory(f, dir);
  const SpaceTimeField g = read_trajectory(dir);
  std::filesystem::remove_all(dir);
  REQUIRE(g.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(g.times()[k] == f.times()[k]);
    CHECK(g.slice(k).grid() == f.slice(k).grid());
    bool same = true;
    for (std::size_t i = 0; i < f.slice(k).size(); ++i) same = same && g.slice(k)[i] == f.slice(k)[i];
    CHECK(same);
  }
}
