#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/harness.hpp"

using namespace fracdiff;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

ExperimentConfig linear_rate() { return preset("linear-rate").front(); }

ExperimentConfig nonlinear_chain() { return preset("nonlinear-chain").front(); }

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("fracdiff-harness-test-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("rate fit examples") {
  const auto t = geometric_ladder(10.0, 1000.0, 8);
  std::vector<double> power, flat, perturbed;
  for (double s : t) {
    power.push_back(3.0 * std::pow(s, -2.0));
    flat.push_back(0.42);
    perturbed.push_back(std::pow(s, -1.5) * (1.0 + 0.1 / s));
  }
  const RateFit a = fit_rate(t, power);
  CHECK(std::abs(a.slope + 2.0) <= 1e-6);
  CHECK(a.residual <= 1e-9);
  CHECK(std::abs(fit_rate(t, flat).slope) <= 1e-9);
  CHECK(std::abs(fit_rate(t, perturbed).slope + 1.5) <= 0.02);

  flat[3] = 0.0;
  CHECK_THROWS_AS(fit_rate(t, flat), SaturatedError);
  flat[3] = -1.0;
  CHECK_THROWS_AS(fit_rate(t, flat), SaturatedError);
}

TEST_CASE("geometric ladder") {
  const auto t = geometric_ladder(30.0, 1000.0, 8);
  REQUIRE(t.size() == 8);
  CHECK(t.front() == doctest::Approx(30.0));
  CHECK(t.back() == doctest::Approx(1000.0));
  for (std::size_t i = 2; i < t.size(); ++i)
    CHECK(t[i] / t[i - 1] == doctest::Approx(t[1] / t[0]).epsilon(1e-12));
  CHECK_THROWS_AS(geometric_ladder(10.0, 1.0, 8), ConfigError);
}

TEST_CASE("predicted exponents of the profiles") {
  auto lin = linear_rate();
  auto [w, wc] = predicted_rate(lin, lin.profiles[0]);
  CHECK(w == doctest::Approx(1.0));
  CHECK(wc == Claim::vanishing);
  auto [cut, cc] = predicted_rate(lin, lin.profiles[1]);
  CHECK(cut == doctest::Approx(1.0));
  CHECK(cc == Claim::slope);

  lin.q = kInf;
  lin.ell = 1.0;
  CHECK(predicted_rate(lin, lin.profiles[0]).first == doctest::Approx(1.0));

  auto nl = nonlinear_chain();
  auto [u0, c0] = predicted_rate(nl, nl.profiles[0]);
  CHECK(u0 == doctest::Approx(1.0));
  CHECK(c0 == Claim::slope);
  auto [u1, c1] = predicted_rate(nl, nl.profiles[1]);
  CHECK(u1 == doctest::Approx(2.0));
  CHECK(c1 == Claim::bounded);

  auto conv = preset("convection").front();
  auto [z, zc] = predicted_rate(conv, conv.profiles[0]);
  CHECK(z == doctest::Approx(2.0 / 3.0 + 1.0 / 1.5));
  CHECK(zc == Claim::vanishing);
  auto [zs, zsc] = predicted_rate(conv, conv.profiles[1]);
  CHECK(zs == doctest::Approx(2.0 / 3.0 + 1.0 / 1.5));
  CHECK(zsc == Claim::slope);
}

TEST_CASE("constraint violations are rejected before any compute") {
  auto c = linear_rate();
  CHECK_NOTHROW(c.validate());

  auto bad = c;
  bad.times.clear();
  CHECK_THROWS_WITH_AS(bad.validate(), "no sample times", ConfigError);
  bad.times = geometric_ladder(30.0, 1000.0, 5);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.times = geometric_ladder(30.0, 600.0, 8);
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.times = geometric_ladder(30.0, 1000.0, 8);
  bad.times[3] *= 1.05;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = c;
  bad.ell = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.solver.theta = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.forcing.kind = "kernel";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.profiles[1].name = "U0";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  auto conv = preset("convection").front();
  conv.theta = conv.solver.theta = 1.0;
  CHECK_THROWS_AS(conv.validate(), ConfigError);

  auto nl = nonlinear_chain();
  CHECK_NOTHROW(nl.validate());
  bad = nl;
  bad.nonlinear.p = 1.4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = nl;
  bad.nonlinear.p = 2.1;
  CHECK_NOTHROW(bad.validate());
  bad.K = 3.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = nl;
  bad.ell = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.q = kInf;
  CHECK_NOTHROW(bad.validate());
  bad = nl;
  bad.forcing.kind = "gaussian_exp";
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  auto lp = preset("limit-profile").front();
  CHECK_NOTHROW(lp.validate());
  lp.nonlinear.p = 2.1;
  lp.K = 2.0;
  CHECK_NOTHROW(lp.validate());
  lp.K = 2.5;
  CHECK_THROWS_AS(lp.validate(), ConfigError);

  CHECK_THROWS_AS(run_experiment(bad), ConfigError);
}

TEST_CASE("experiment JSON round trip") {
  for (const auto& name : preset_names())
    for (const auto& c : preset(name)) {
      const std::string text = experiment_to_json(c);
      const ExperimentConfig back = experiment_from_json(text);
      CAPTURE(c.id);
      CHECK(experiment_to_json(back) == text);
      CHECK(back.times == c.times);
      CHECK(back.q == c.q);
    }
  const auto c = experiment_from_json(R"({
    "id": "custom", "kind": "linear", "theta": 1, "K": 1, "q": "inf", "ell": 0,
    "datum": {"kind": "indicator", "width": 1},
    "ladder": {"first": 10, "last": 1000, "count": 7},
    "profiles": [{"name": "w"}]
  })");
  CHECK(std::isinf(c.q));
  CHECK(c.times.size() == 7);
  CHECK(c.profiles.front().label == "w");
  CHECK_THROWS_AS(experiment_from_json("{\"id\": \"x\", \"kind\": \"quadratic\"}"), ConfigError);
  CHECK_THROWS_AS(experiment_from_json("not json"), ConfigError);
}

TEST_CASE("single experiment report files") {
  const RateReport r = run_experiment(linear_rate());
  CHECK(r.passed());
  CHECK(r.find("w").slope <= -1.5);
  CHECK(std::abs(r.find("w_alpha0").slope + 1.0) <= 0.15);
  REQUIRE(r.gaps.size() == 1);
  CHECK(r.gaps[0].gap >= 0.5);

  const auto dir = scratch("single");
  emit_report({r}, dir);
  const std::string csv = slurp(dir / "linear-rate.csv");
  CHECK(csv.rfind(std::string(kReportHeader) + "\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + r.series.size() * r.config.times.size());
  CHECK(csv.find("linear-rate.w_alpha0,") != std::string::npos);
  const auto index = nlohmann::json::parse(slurp(dir / "index.json"));
  CHECK(index["experiments"].size() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("batch of three configs") {
  std::vector<ExperimentConfig> batch;
  for (const char* id : {"a", "b", "c"}) {
    auto c = linear_rate();
    c.id = id;
    c.profiles.resize(1);
    c.gaps.clear();
    batch.push_back(c);
  }
  batch[1].datum.kind = "gaussian";
  batch[2].q = kInf;
  const auto reports = run_batch(batch, 2);
  REQUIRE(reports.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(reports[i].config.id == batch[i].id);

  const auto dir = scratch("batch");
  emit_report(reports, dir);
  std::size_t csvs = 0, jsons = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    csvs += e.path().extension() == ".csv";
    jsons += e.path().extension() == ".json";
  }
  CHECK(csvs == 3);
  CHECK(jsons == 1);
  for (const char* id : {"a", "b", "c"})
    CHECK(count_lines(slurp(dir / (std::string(id) + ".csv"))) == 1 + batch[0].times.size());

  const auto again = reports_from_index_json(slurp(dir / "index.json"));
  REQUIRE(again.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(report_csv(again[i]) == report_csv(reports[i]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("identical configs give byte-identical CSV") {
  auto c = linear_rate();
  const std::string first = report_csv(run_experiment(c));
  const std::string second = report_csv(run_experiment(c));
  CHECK(first == second);
  const auto batch = run_batch({c, c}, 2);
  CHECK(report_csv(batch[0]) == first);
  CHECK(report_csv(batch[1]) == first);
}

TEST_CASE("empty reports are refused") {
  RateReport empty;
  empty.config = linear_rate();
  CHECK_THROWS_WITH_AS(emit_report({empty}, scratch("empty")), "no sample times", ConfigError);
}

TEST_CASE("exact profile is reported as saturated") {
  auto c = linear_rate();
  c.datum.kind = "zero";
  c.profiles.resize(1);
  c.profiles[0].max_slope.reset();
  c.gaps.clear();
  const RateReport r = run_experiment(c);
  CHECK(r.series.at(0).verdict == "saturated");
  CHECK(r.passed());
}

TEST_CASE("blow-up yields a partial report") {
  auto c = nonlinear_chain();
  c.nonlinear.lambda = 1.0;
  c.datum.amplitude = 30.0;
  c.datum.width = 0.2;
  c.solver.blowup_cap = 1e3;
  const RateReport r = run_experiment(c);
  CHECK(r.partial);
  CHECK_FALSE(r.passed());
  CHECK(r.message.find("cap") != std::string::npos);
}
