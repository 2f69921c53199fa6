#include "fracdiff/propagator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <numbers>
#include <tuple>

#include <Eigen/QR>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fftw3.h>

#include "fracdiff/errors.hpp"
#include "fracdiff/kernel_cache.hpp"
#include "fracdiff/parallel.hpp"

namespace fracdiff {

namespace {

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : data(fftw_malloc(bytes)) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* real() { return static_cast<double*>(data); }
  fftw_complex* complex() { return static_cast<fftw_complex*>(data); }
  void* data;
};

// Below this c the semigroup step is the identity to double precision.
constexpr double kIdentityC = 1e-15;
// Beyond this c * pi^theta the out-of-band part exp(-c pi^theta) is negligible.
constexpr double kBandLimitedExponent = 40.0;

}  // namespace

std::vector<double> bandlimited_weights(const KernelProfile& kernel, double c, std::size_t max_k) {
  if (kernel.alpha() != 0 || kernel.m() != 0 || kernel.dim() != 1)
    throw ConfigError("band-limited weights need the 1-D kernel itself");
  if (!(c >= 0.0)) throw ConfigError("band-limited weights need c >= 0");
  std::vector<double> w(max_k + 1, 0.0);
  if (c < kIdentityC) {
    w[0] = 1.0;
    return w;
  }
  const double theta = kernel.theta();
  const double width = std::pow(c, 1.0 / theta);
  const bool band_limited = c * std::pow(std::numbers::pi, theta) > kBandLimitedExponent;

  boost::math::quadrature::tanh_sinh<double> integrator;
  w[0] = integrator.integrate(
             [&](double s) { return std::exp(-c * std::pow(s, theta)); }, 0.0, std::numbers::pi) /
         std::numbers::pi;
  parallel_for(1, max_k + 1, [&](std::size_t k) {
    double v = kernel.profile(static_cast<double>(k) / width) / width;
    if (!band_limited) v -= band_tail_integral(theta, c, static_cast<long>(k));
    w[k] = v;
  });
  return w;
}

std::size_t fast_fft_size(std::size_t n) {
  for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
    std::size_t r = m;
    for (std::size_t p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

ToeplitzConvolver::ToeplitzConvolver(std::size_t source_size, std::size_t target_size,
                                     std::size_t offset)
    : source_size_(source_size), target_size_(target_size), offset_(offset) {
  if (source_size == 0 || target_size == 0) throw ConfigError("empty convolution");
  fft_size_ = fast_fft_size(source_size + target_size - 1);
  const int n = static_cast<int>(fft_size_);
  FftwBuffer real(sizeof(double) * fft_size_);
  FftwBuffer spec(sizeof(fftw_complex) * (fft_size_ / 2 + 1));
  std::lock_guard lock(fftw_mutex());
  forward_plan_ = fftw_plan_dft_r2c_1d(n, real.real(), spec.complex(), FFTW_ESTIMATE);
  backward_plan_ = fftw_plan_dft_c2r_1d(n, spec.complex(), real.real(), FFTW_ESTIMATE);
  if (!forward_plan_ || !backward_plan_) throw NumericalError("FFTW planning failed");
}

ToeplitzConvolver::~ToeplitzConvolver() {
  std::lock_guard lock(fftw_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (backward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

std::size_t ToeplitzConvolver::max_lag() const noexcept {
  return std::max(offset_ + target_size_ - 1, source_size_ - 1 - offset_);
}

ToeplitzConvolver::Spectrum ToeplitzConvolver::transform(std::span<const double> weights) const {
  if (weights.size() < max_lag() + 1) throw ConfigError("too few Toeplitz weights");
  FftwBuffer real(sizeof(double) * fft_size_);
  FftwBuffer spec(sizeof(fftw_complex) * (fft_size_ / 2 + 1));
  double* b = real.real();
  std::fill(b, b + fft_size_, 0.0);
  const long kmin = static_cast<long>(offset_) - static_cast<long>(source_size_) + 1;
  const std::size_t length = source_size_ + target_size_ - 1;
  for (std::size_t n = 0; n < length; ++n) {
    const long k = static_cast<long>(n) + kmin;
    b[n] = weights[static_cast<std::size_t>(std::abs(k))];
  }
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), b, spec.complex());
  Spectrum out(fft_size_ / 2 + 1);
  std::memcpy(out.data(), spec.data, sizeof(fftw_complex) * out.size());
  return out;
}

void ToeplitzConvolver::apply(std::span<const Spectrum* const> kernels,
                              std::span<const std::span<const double>> sources,
                              std::span<double> target) const {
  if (kernels.size() != sources.size()) throw ConfigError("kernel/source count mismatch");
  if (target.size() != target_size_) throw ConfigError("convolution target size mismatch");
  const std::size_t nspec = fft_size_ / 2 + 1;
  FftwBuffer real(sizeof(double) * fft_size_);
  FftwBuffer spec(sizeof(fftw_complex) * nspec);
  std::vector<std::complex<double>> acc(nspec, 0.0);
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto src = sources[s];
    if (src.size() != source_size_) throw ConfigError("convolution source size mismatch");
    double* a = real.real();
    std::copy(src.begin(), src.end(), a);
    std::fill(a + source_size_, a + fft_size_, 0.0);
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), a, spec.complex());
    const auto* f = reinterpret_cast<const std::complex<double>*>(spec.data);
    const Spectrum& k = *kernels[s];
    for (std::size_t i = 0; i < nspec; ++i) acc[i] += f[i] * k[i];
  }
  std::memcpy(spec.data, acc.data(), sizeof(fftw_complex) * nspec);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(backward_plan_), spec.complex(), real.real());
  const double scale = 1.0 / static_cast<double>(fft_size_);
  const double* c = real.real();
  for (std::size_t i = 0; i < target_size_; ++i) target[i] = c[i + source_size_ - 1] * scale;
}

void ToeplitzConvolver::apply(const Spectrum& kernel, std::span<const double> source,
                              std::span<double> target) const {
  const Spectrum* k[] = {&kernel};
  const std::span<const double> s[] = {source};
  apply(k, s, target);
}

namespace {

using ConvolverKey = std::tuple<std::size_t, std::size_t, std::size_t>;
using SpectrumKey = std::tuple<double, std::size_t, std::size_t, std::size_t>;

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::map<ConvolverKey, std::shared_ptr<ToeplitzConvolver>>& convolvers() {
  static std::map<ConvolverKey, std::shared_ptr<ToeplitzConvolver>> m;
  return m;
}

// Spectra keyed by (theta, sizes) and then by c, matched to 1e-12 relative.
std::map<SpectrumKey, std::map<double, std::shared_ptr<const ToeplitzConvolver::Spectrum>>>&
spectra() {
  static std::map<SpectrumKey, std::map<double, std::shared_ptr<const ToeplitzConvolver::Spectrum>>>
      m;
  return m;
}

// Continuation of box values beyond |x| = L. Far from the data every solution
// behaves like a sum of powers |y|^{-(1 + j theta + k)}; the lowest three are
// fitted per side on [L/2, L]. Without a power tail, or when the fit is poor,
// the kernel shape u(+-L) G(y, t+1) / G(L, t+1) is used instead.
class GhostTail {
 public:
  GhostTail(const KernelProfile& kernel, const Grid& grid, std::span<const double> box, double t)
      : kernel_(&kernel), t_(t), L_(grid.half_width), left_(box.front()), right_(box.back()) {
    g_edge_ = kernel(L_, t + 1.0);
    if (kernel.tail_coefficient() == 0.0) return;
    exponents_ = tail_exponents(kernel.theta());
    const std::size_t M = box.size() / 2;
    fitted_ = fit(box, M + M / 2, 2 * M, 0) && fit(box, M - M / 2, 0, 1);
  }

  double operator()(double y) const {
    const int side = y > 0.0 ? 0 : 1;
    if (!fitted_) return (side == 0 ? right_ : left_) * (*kernel_)(y, t_ + 1.0) / g_edge_;
    const double w = L_ / std::abs(y);
    double v = 0.0;
    for (std::size_t k = 0; k < exponents_.size(); ++k)
      v += coef_[side][k] * std::pow(w, exponents_[k]);
    return v;
  }

 private:
  static std::vector<double> tail_exponents(double theta) {
    std::vector<double> all;
    for (int j = 1; j <= 3; ++j)
      for (int k = 0; k <= 3; ++k) all.push_back(1.0 + j * theta + k);
    std::sort(all.begin(), all.end());
    std::vector<double> out;
    for (double e : all)
      if (out.empty() || e - out.back() > 0.05) out.push_back(e);
    out.resize(3);
    return out;
  }

  bool fit(std::span<const double> box, std::size_t from, std::size_t to, int side) {
    constexpr int kSamples = 48;
    const std::size_t n = exponents_.size();
    Eigen::MatrixXd A(kSamples + 1, static_cast<Eigen::Index>(n));
    Eigen::VectorXd b(kSamples + 1);
    const double h = 2.0 * L_ / static_cast<double>(box.size() - 1);
    double scale = 0.0;
    for (int r = 0; r <= kSamples; ++r) {
      const double f = static_cast<double>(r) / kSamples;
      const auto i = static_cast<std::size_t>(std::lround(
          static_cast<double>(from) + f * (static_cast<double>(to) - static_cast<double>(from))));
      const double y = -L_ + static_cast<double>(i) * h;
      const double w = L_ / std::abs(y);
      for (std::size_t k = 0; k < n; ++k) A(r, static_cast<Eigen::Index>(k)) = std::pow(w, exponents_[k]);
      b(r) = box[i];
      scale = std::max(scale, std::abs(box[i]));
    }
    if (scale == 0.0) {
      coef_[side].assign(n, 0.0);
      return true;
    }
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    if (((A * c - b).cwiseAbs().maxCoeff()) > kFitTolerance * scale) return false;
    coef_[side].assign(c.data(), c.data() + n);
    return true;
  }

  static constexpr double kFitTolerance = 1e-3;

  const KernelProfile* kernel_;
  double t_, L_, left_, right_, g_edge_ = 1.0;
  bool fitted_ = false;
  std::vector<double> exponents_;
  std::array<std::vector<double>, 2> coef_;
};

}  // namespace

EpochBox::EpochBox(double theta, double ell, std::size_t half_cells, int cells_per_scale)
    : theta_(theta), ell_(ell), half_cells_(half_cells), cells_per_scale_(cells_per_scale) {
  if (!(ell > 0.0)) throw ConfigError("box scale must be positive");
  if (half_cells < 4 || half_cells % 2) throw ConfigError("box half cell count must be even");
  if (cells_per_scale < 2) throw ConfigError("need at least 2 cells per length scale");
  h_ = ell / cells_per_scale;
  const double L = h_ * static_cast<double>(half_cells);
  grid_ = Grid(L, 2 * half_cells + 1);
  padded_ = Grid(3.0 * L, 6 * half_cells + 1);
  kernel_ = KernelLibrary::shared().get(theta, 0, 0);
  const ConvolverKey key{padded_.size, grid_.size, offset()};
  std::lock_guard lock(cache_mutex());
  auto& c = convolvers()[key];
  if (!c) c = std::make_shared<ToeplitzConvolver>(padded_.size, grid_.size, offset());
  convolver_ = c;
}

const ToeplitzConvolver::Spectrum& EpochBox::spectrum(double tau) const {
  const double c = tau / std::pow(h_, theta_);
  const SpectrumKey key{theta_, padded_.size, grid_.size, offset()};
  {
    std::lock_guard lock(cache_mutex());
    auto& by_c = spectra()[key];
    auto it = by_c.lower_bound(c * (1.0 - 1e-12));
    if (it != by_c.end() && it->first <= c * (1.0 + 1e-12)) return *it->second;
  }
  const auto w = bandlimited_weights(*kernel_, c, convolver_->max_lag());
  auto s = std::make_shared<const ToeplitzConvolver::Spectrum>(convolver_->transform(w));
  std::lock_guard lock(cache_mutex());
  auto& slot = spectra()[key][c];
  if (!slot) slot = std::move(s);
  return *slot;
}

void EpochBox::fill_padded(std::span<const double> box, double t, std::span<double> padded) const {
  if (box.size() != grid_.size || padded.size() != padded_.size)
    throw ConfigError("box/padded size mismatch");
  const std::size_t o = offset();
  std::copy(box.begin(), box.end(), padded.begin() + static_cast<long>(o));
  const GhostTail tail(*kernel_, grid_, box, t);
  for (std::size_t i = 0; i < o; ++i) {
    padded[i] = tail(padded_.x(i));
    padded[padded.size() - 1 - i] = tail(padded_.x(padded.size() - 1 - i));
  }
}

void EpochBox::propagate(std::span<const double> taus,
                         std::span<const std::span<const double>> sources,
                         std::span<double> box, std::span<const double> tail_exponents) const {
  if (taus.size() != sources.size()) throw ConfigError("one step length per source");
  if (!tail_exponents.empty() && tail_exponents.size() != sources.size())
    throw ConfigError("one tail exponent per source");
  std::vector<const ToeplitzConvolver::Spectrum*> kernels;
  for (double tau : taus) {
    if (!(tau >= 0.0)) throw ConfigError("negative propagation time");
    kernels.push_back(&spectrum(tau));
  }
  convolver_->apply(kernels, sources, box);
  for (std::size_t s = 0; s < tail_exponents.size(); ++s)
    add_far_field(taus[s], tail_exponents[s], sources[s].front(), sources[s].back(), box);
}

void EpochBox::add_far_field(double tau, double a, double left, double right,
                             std::span<double> box) const {
  const double c = kernel_->tail_coefficient();
  if (!(a > 1.0) || tau == 0.0 || c == 0.0 || (left == 0.0 && right == 0.0)) return;
  // With y beyond Y = 3L + h/2 and b = 1 + theta,
  //   c tau int_Y^inf (y - x)^{-b} v (3L / y)^a dy
  //     = c tau v (3L)^a Y^{1-a-b} sum_k (b)_k / k! (x / Y)^k / (a + b + k - 1).
  const double b = 1.0 + theta_;
  const double edge = padded_.half_width;
  const double Y = edge + 0.5 * h_;
  constexpr int kTerms = 64;
  std::array<double, kTerms> coef{};
  double r = 1.0;
  for (int k = 0; k < kTerms; ++k) {
    coef[k] = r / (a + b + k - 1.0);
    r *= (b + k) / (k + 1.0);
  }
  const double scale = c * tau * std::pow(edge, a) * std::pow(Y, 1.0 - a - b);
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double u = grid_.x(i) / Y;
    const double u2 = u * u;
    double even = 0.0, odd = 0.0;
    for (int k = kTerms - 2; k >= 0; k -= 2) {
      even = even * u2 + coef[k];
      odd = odd * u2 + coef[k + 1];
    }
    box[i] += scale * (right * (even + u * odd) + left * (even - u * odd));
  }
}

EpochBox EpochBox::next() const {
  return EpochBox(theta_, 2.0 * ell_, half_cells_, cells_per_scale_);
}

std::vector<double> EpochBox::remesh(std::span<const double> box, double t) const {
  if (box.size() != grid_.size) throw ConfigError("box size mismatch");
  const EpochBox nb = next();
  const std::size_t M = half_cells_;
  std::vector<double> out(nb.grid_.size);
  const GhostTail tail(*kernel_, grid_, box, t);
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = (j >= M / 2 && j <= 3 * M / 2) ? box[2 * j - M] : tail(nb.grid_.x(j));
  return out;
}

}  // namespace fracdiff
