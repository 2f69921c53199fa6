#include "fracdiff/kernel_cache.hpp"

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fracdiff/errors.hpp"

namespace fracdiff {

using nlohmann::json;

void save_profile(const KernelProfile& profile, const std::filesystem::path& path) {
  const auto& key = profile.key();
  json j;
  j["format"] = "fracdiff-profile";
  j["version"] = kProfileFormatVersion;
  j["key"] = {{"theta", key.theta}, {"dim", key.dim}, {"alpha", key.alpha}, {"m", key.m},
              {"z_max", key.grid.z_max}, {"spacing", key.grid.spacing},
              {"z_scale", key.grid.z_scale}};
  j["tail_coefficient"] = profile.tail_coefficient();
  j["values"] = std::vector<double>(profile.values().begin(), profile.values().end());

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write profile cache file " + tmp);
    out << j.dump();
  }
  std::filesystem::rename(tmp, path);
}

KernelProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read profile cache file " + path.string());
  const json j = json::parse(in);
  if (j.value("format", "") != "fracdiff-profile" || j.value("version", 0) != kProfileFormatVersion)
    throw NumericalError("stale or foreign profile cache file " + path.string());
  const auto& k = j.at("key");
  ProfileKey key{k.at("theta").get<double>(), k.at("dim").get<int>(), k.at("alpha").get<int>(),
                 k.at("m").get<int>(),
                 ProfileGrid{k.at("z_max").get<double>(), k.at("spacing").get<double>(),
                             k.at("z_scale").get<double>()}};
  return KernelProfile(key, j.at("values").get<std::vector<double>>(),
                       j.at("tail_coefficient").get<double>());
}

KernelLibrary::KernelLibrary(ProfileGrid grid, std::optional<std::filesystem::path> cache_dir)
    : grid_(grid), cache_dir_(std::move(cache_dir)) {
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

KernelLibrary& KernelLibrary::shared() {
  static KernelLibrary library = [] {
    const char* dir = std::getenv(kCacheDirEnv);
    if (dir != nullptr && *dir != '\0') return KernelLibrary({}, std::filesystem::path(dir));
    return KernelLibrary();
  }();
  return library;
}

std::filesystem::path KernelLibrary::file_for(const ProfileKey& key) const {
  // FNV-1a keeps file names stable across builds and platforms.
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : key.to_string()) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  std::ostringstream name;
  name << "profile_" << std::hex << hash << ".json";
  return *cache_dir_ / name.str();
}

std::shared_ptr<const KernelProfile> KernelLibrary::get(const ProfileKey& key) {
  const std::string id = key.to_string();
  {
    std::lock_guard lock(mutex_);
    if (auto it = profiles_.find(id); it != profiles_.end()) return it->second;
  }

  std::shared_ptr<const KernelProfile> profile;
  if (cache_dir_ && std::filesystem::exists(file_for(key))) {
    try {
      auto loaded = load_profile(file_for(key));
      if (loaded.key() == key) profile = std::make_shared<const KernelProfile>(std::move(loaded));
    } catch (const std::exception&) {
      profile.reset();  // unreadable entry: retabulate and overwrite
    }
  }
  if (!profile) {
    profile = std::make_shared<const KernelProfile>(tabulate_profile(key));
    std::lock_guard lock(mutex_);
    ++tabulations_;
    if (cache_dir_) save_profile(*profile, file_for(key));
  }

  std::lock_guard lock(mutex_);
  return profiles_.try_emplace(id, std::move(profile)).first->second;
}

std::shared_ptr<const KernelProfile> KernelLibrary::get(double theta, int alpha, int m, int dim) {
  return get(ProfileKey{theta, dim, alpha, m, grid_});
}

std::size_t KernelLibrary::tabulations() const {
  std::lock_guard lock(mutex_);
  return tabulations_;
}

}  // namespace fracdiff
