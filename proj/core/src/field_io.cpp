#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fracdiff/errors.hpp"
#include "fracdiff/field.hpp"

namespace fracdiff {

using nlohmann::json;

namespace {

constexpr char kBinaryMagic[8] = {'F', 'D', 'F', 'L', 'D', '1', '\0', '\0'};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ConfigError("truncated field file");
  return v;
}

Grid grid_from_nodes(const std::vector<double>& x) {
  if (x.size() < 3) throw ConfigError("field file needs at least 3 nodes");
  const double L = x.back();
  if (std::abs(x.front() + L) > 1e-9 * std::max(1.0, L))
    throw ConfigError("field file grid is not symmetric");
  Grid g(L, x.size());
  const double tol = 1e-7 * g.spacing();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i] - g.x(i)) > tol) throw ConfigError("field file grid is not uniform");
  return g;
}

}  // namespace

void write_field_csv(const Field& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "x,value\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    out << format_number(f.grid().x(i)) << ',' << format_number(f[i]) << '\n';
}

Field read_field_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("x,value", 0) != 0) throw ConfigError("field CSV needs header x,value");
  std::vector<double> x, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed field CSV row: " + line);
    x.push_back(std::stod(line.substr(0, comma)));
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  return Field(grid_from_nodes(x), std::move(v));
}

void write_field_binary(const Field& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(kBinaryMagic, sizeof kBinaryMagic);
  put<double>(out, f.grid().half_width);
  put<std::uint64_t>(out, f.size());
  std::uint8_t flags = (f.support_radius ? 1 : 0) | (f.tail_exponent ? 2 : 0);
  put<std::uint8_t>(out, flags);
  put<double>(out, f.support_radius.value_or(0.0));
  put<double>(out, f.tail_exponent.value_or(0.0));
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
}

Field read_field_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  char magic[sizeof kBinaryMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0)
    throw ConfigError("not a fracdiff field file: " + path.string());
  const double L = get<double>(in);
  const auto n = get<std::uint64_t>(in);
  const auto flags = get<std::uint8_t>(in);
  const double support = get<double>(in);
  const double tail = get<double>(in);
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw ConfigError("truncated field file");
  Field f(Grid(L, n), std::move(v));
  if (flags & 1) f.support_radius = support;
  if (flags & 2) f.tail_exponent = tail;
  return f;
}

void write_trajectory(const SpaceTimeField& f, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format"] = "fracdiff-trajectory";
  manifest["version"] = 1;
  json slices = json::array();
  for (std::size_t k = 0; k < f.size(); ++k) {
    std::ostringstream name;
    name << "slice_" << k << ".bin";
    write_field_binary(f.slice(k), dir / name.str());
    slices.push_back({{"t", f.times()[k]}, {"file", name.str()}});
  }
  manifest["slices"] = slices;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

SpaceTimeField read_trajectory(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("missing trajectory manifest in " + dir.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad trajectory manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "fracdiff-trajectory")
    throw ConfigError("not a fracdiff trajectory: " + dir.string());
  SpaceTimeField f;
  for (const auto& s : manifest.at("slices"))
    f.push_back(s.at("t").get<double>(), read_field_binary(dir / s.at("file").get<std::string>()));
  return f;
}

}  // namespace fracdiff
