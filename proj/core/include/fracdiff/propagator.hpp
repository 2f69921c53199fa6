#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "fracdiff/field.hpp"
#include "fracdiff/kernel.hpp"

namespace fracdiff {

/// Weights w_k, k = 0..max_k, of the semigroup restricted to functions band
/// limited to the grid (spacing h):
///   w_k = (1/pi) * integral_0^pi exp(-c s^theta) cos(k s) ds,  c = tau / h^theta.
/// They sum to one over all k and reduce to the identity as c -> 0.
std::vector<double> bandlimited_weights(const KernelProfile& kernel, double c, std::size_t max_k);

/// Smallest 2,3,5,7-smooth integer >= n.
std::size_t fast_fft_size(std::size_t n);

/// Linear Toeplitz product out[i] = sum_j w[offset + i - j] src[j] for fixed
/// source/target sizes, evaluated with real FFTs.
class ToeplitzConvolver {
 public:
  ToeplitzConvolver(std::size_t source_size, std::size_t target_size, std::size_t offset);
  ~ToeplitzConvolver();
  ToeplitzConvolver(const ToeplitzConvolver&) = delete;
  ToeplitzConvolver& operator=(const ToeplitzConvolver&) = delete;

  using Spectrum = std::vector<std::complex<double>>;

  /// Spectrum of symmetric weights (w[-k] = w[k]); `weights` must cover
  /// |k| <= max_lag().
  Spectrum transform(std::span<const double> weights) const;
  std::size_t max_lag() const noexcept;

  /// Sum over terms of (kernel spectrum x source), written to target.
  void apply(std::span<const Spectrum* const> kernels,
             std::span<const std::span<const double>> sources, std::span<double> target) const;
  void apply(const Spectrum& kernel, std::span<const double> source,
             std::span<double> target) const;

  std::size_t source_size() const noexcept { return source_size_; }
  std::size_t target_size() const noexcept { return target_size_; }
  std::size_t fft_size() const noexcept { return fft_size_; }

 private:
  std::size_t source_size_, target_size_, offset_, fft_size_;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

/// Uniform box [-L, L] scaled to the current length scale ell, with ghost
/// strips of width 2L on both sides that carry a kernel-shaped continuation of
/// the solution. Geometry in units of ell is the same in every epoch, so the
/// convolution spectra are shared across epochs.
class EpochBox {
 public:
  /// Half width L = half_cells * h with h = ell / cells_per_scale.
  EpochBox(double theta, double ell, std::size_t half_cells, int cells_per_scale);

  double theta() const noexcept { return theta_; }
  double ell() const noexcept { return ell_; }
  double spacing() const noexcept { return h_; }
  const Grid& grid() const noexcept { return grid_; }
  /// [-3L, 3L]; box node i is padded node i + 2 * half_cells.
  const Grid& padded_grid() const noexcept { return padded_; }
  std::size_t offset() const noexcept { return 2 * half_cells_; }

  /// Writes box values plus a ghost continuation: a least-squares fit of the
  /// outer half of each side by powers of L / |y|, or the kernel shape
  /// u(+-L) G(y, t+1) / G(L, t+1) when the fit is poor.
  void fill_padded(std::span<const double> box, double t, std::span<double> padded) const;

  /// e^{-tau A} of padded sources (one kernel per source, summed) onto the box.
  /// A source with tail exponent a > 1 is continued beyond the padded grid as
  /// v(+-3L) (3L / |y|)^a, and the kernel tail's action on that part is added.
  void propagate(std::span<const double> taus, std::span<const std::span<const double>> sources,
                 std::span<double> box, std::span<const double> tail_exponents = {}) const;

  /// Box of the next epoch (ell doubled) and the values carried over to it.
  EpochBox next() const;
  std::vector<double> remesh(std::span<const double> box, double t) const;

 private:
  const ToeplitzConvolver::Spectrum& spectrum(double tau) const;
  void add_far_field(double tau, double a, double left, double right, std::span<double> box) const;

  double theta_, ell_, h_;
  std::size_t half_cells_;
  int cells_per_scale_;
  Grid grid_, padded_;
  std::shared_ptr<const KernelProfile> kernel_;
  std::shared_ptr<ToeplitzConvolver> convolver_;
};

}  // namespace fracdiff
