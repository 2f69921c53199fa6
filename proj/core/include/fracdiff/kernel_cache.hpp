#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "fracdiff/kernel.hpp"

namespace fracdiff {

/// Environment variable naming the on-disk profile cache directory.
inline constexpr const char* kCacheDirEnv = "FRACDIFF_CACHE_DIR";

/// Version tag written into cache files; bump when the format or the
/// tabulation numerics change.
inline constexpr int kProfileFormatVersion = 1;

void save_profile(const KernelProfile& profile, const std::filesystem::path& path);
KernelProfile load_profile(const std::filesystem::path& path);

/// Thread-safe memo of tabulated profiles, optionally backed by a directory of
/// JSON files keyed by (theta, dim, alpha, m, grid).
class KernelLibrary {
 public:
  explicit KernelLibrary(ProfileGrid grid = {},
                         std::optional<std::filesystem::path> cache_dir = std::nullopt);

  /// Library configured from FRACDIFF_CACHE_DIR (no disk cache if unset).
  static KernelLibrary& shared();

  std::shared_ptr<const KernelProfile> get(const ProfileKey& key);
  std::shared_ptr<const KernelProfile> get(double theta, int alpha, int m, int dim = 1);

  const ProfileGrid& grid() const noexcept { return grid_; }
  std::size_t tabulations() const;

 private:
  std::filesystem::path file_for(const ProfileKey& key) const;

  ProfileGrid grid_;
  std::optional<std::filesystem::path> cache_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const KernelProfile>> profiles_;
  std::size_t tabulations_ = 0;
};

}  // namespace fracdiff
