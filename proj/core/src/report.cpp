#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/harness.hpp"

namespace fracdiff {

using nlohmann::json;

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_json(const json& j) {
  if (j.is_null()) return std::nan("");
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::nan("");
  }
  return j.get<double>();
}

// Series id: the experiment id, suffixed with the profile label when the
// experiment compares several profiles.
std::string series_id(const RateReport& r, const SeriesReport& s) {
  return r.config.profiles.size() == 1 ? r.config.id : r.config.id + "." + s.label;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string report_csv(const RateReport& report) {
  const auto& c = report.config;
  std::ostringstream os;
  os << kReportHeader << '\n';
  for (const auto& s : report.series) {
    const std::string prefix = series_id(report, s) + ',' + num(c.theta) + ',' +
                               std::to_string(c.dim) + ',' + num(c.K) + ',' + num(c.q) + ',' +
                               num(c.ell) + ',';
    for (std::size_t k = 0; k < s.errors.size(); ++k)
      os << prefix << num(s.times[k]) << ',' << num(s.errors[k]) << ',' << num(s.scaled_errors[k])
         << ',' << num(s.predicted_exponent) << ',' << num(s.slope) << ',' << num(s.residual)
         << ',' << s.verdict << '\n';
  }
  return os.str();
}

std::string report_index_json(const std::vector<RateReport>& reports) {
  json index;
  index["format"] = 1;
  index["experiments"] = json::array();
  for (const auto& r : reports) {
    json e;
    e["id"] = r.config.id;
    e["csv"] = r.config.id + ".csv";
    e["passed"] = r.passed();
    e["partial"] = r.partial;
    e["message"] = r.message;
    e["config"] = json::parse(experiment_to_json(r.config));
    e["series"] = json::array();
    for (const auto& s : r.series) {
      e["series"].push_back({{"id", series_id(r, s)},
                             {"label", s.label},
                             {"profile", s.profile},
                             {"claim", to_string(s.claim)},
                             {"predicted_exponent", s.predicted_exponent},
                             {"times", s.times},
                             {"errors", s.errors},
                             {"scaled_errors", s.scaled_errors},
                             {"slope", finite_or_null(s.slope)},
                             {"residual", finite_or_null(s.residual)},
                             {"scaled_trend", finite_or_null(s.scaled_trend)},
                             {"verdict", s.verdict},
                             {"margin", finite_or_null(s.margin)},
                             {"detail", s.detail}});
    }
    e["gaps"] = json::array();
    for (const auto& g : r.gaps)
      e["gaps"].push_back({{"steeper", g.check.steeper},
                           {"shallower", g.check.shallower},
                           {"min_gap", g.check.min_gap},
                           {"gap", std::isfinite(g.gap) ? json(g.gap) : json(num(g.gap))},
                           {"pass", g.pass}});
    index["experiments"].push_back(std::move(e));
  }
  return index.dump(2) + "\n";
}

std::vector<RateReport> reports_from_index_json(const std::string& text) {
  std::vector<RateReport> out;
  try {
    const auto index = json::parse(text);
    for (const auto& e : index.at("experiments")) {
      RateReport r;
      r.config = experiment_from_json(e.at("config").dump());
      r.partial = e.value("partial", false);
      r.message = e.value("message", "");
      for (const auto& j : e.at("series")) {
        SeriesReport s;
        s.label = j.at("label").get<std::string>();
        s.profile = j.at("profile").get<std::string>();
        const auto claim = j.at("claim").get<std::string>();
        s.claim = claim == "bounded" ? Claim::bounded
                  : claim == "slope" ? Claim::slope
                                     : Claim::vanishing;
        s.predicted_exponent = j.at("predicted_exponent").get<double>();
        s.times = j.at("times").get<std::vector<double>>();
        s.errors = j.at("errors").get<std::vector<double>>();
        s.scaled_errors = j.at("scaled_errors").get<std::vector<double>>();
        s.slope = from_json(j.at("slope"));
        s.residual = from_json(j.at("residual"));
        s.scaled_trend = from_json(j.at("scaled_trend"));
        s.verdict = j.at("verdict").get<std::string>();
        s.margin = from_json(j.at("margin"));
        s.detail = j.at("detail").get<std::string>();
        r.series.push_back(std::move(s));
      }
      for (const auto& j : e.at("gaps")) {
        GapResult g;
        g.check = {j.at("steeper").get<std::string>(), j.at("shallower").get<std::string>(),
                   j.at("min_gap").get<double>()};
        g.gap = from_json(j.at("gap"));
        g.pass = j.at("pass").get<bool>();
        r.gaps.push_back(g);
      }
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid report index: ") + e.what());
  }
  return out;
}

void emit_report(const std::vector<RateReport>& reports, const std::filesystem::path& out_dir) {
  for (const auto& r : reports)
    if (r.series.empty() || r.series.front().times.empty())
      throw ConfigError("no sample times");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
  for (const auto& r : reports) write_file(out_dir / (r.config.id + ".csv"), report_csv(r));
  write_file(out_dir / "index.json", report_index_json(reports));
}

}  // namespace fracdiff
