#include "sparsetf/wavelet.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sparsetf {

using cplx = std::complex<double>;

namespace detail {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// fftw planning is not thread-safe; execution with the new-array interface is.
class FftPlans {
 public:
  explicit FftPlans(std::size_t max_size) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (std::size_t n = 1; n <= max_size; n *= 2) {
      std::vector<cplx> buf(n);
      auto* p = reinterpret_cast<fftw_complex*>(buf.data());
      const int ni = static_cast<int>(n);
      Pair pair;
      pair.forward = fftw_plan_dft_1d(ni, p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
      pair.backward = fftw_plan_dft_1d(ni, p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
      plans_.emplace(n, pair);
    }
  }

  ~FftPlans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (auto& [n, pair] : plans_) {
      fftw_destroy_plan(pair.forward);
      fftw_destroy_plan(pair.backward);
    }
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  // Unnormalized in-place transforms.
  void forward(std::vector<cplx>& data) const { run(data, true); }
  void backward(std::vector<cplx>& data) const { run(data, false); }

 private:
  struct Pair {
    fftw_plan forward;
    fftw_plan backward;
  };

  void run(std::vector<cplx>& data, bool fwd) const {
    const auto& pair = plans_.at(data.size());
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(fwd ? pair.forward : pair.backward, p, p);
  }

  std::map<std::size_t, Pair> plans_;
};

}  // namespace detail

double meyer_nu(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double x4 = x * x * x * x;
  return x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x);
}

double meyer_scaling_hat(double xi) {
  constexpr double pi = std::numbers::pi;
  const double a = std::abs(xi);
  if (a <= 2.0 * pi / 3.0) return 1.0;
  if (a >= 4.0 * pi / 3.0) return 0.0;
  return std::cos(0.5 * pi * meyer_nu(3.0 * a / (2.0 * pi) - 1.0));
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

int log2_exact(std::size_t n) {
  if (!is_power_of_two(n)) throw std::invalid_argument("not a power of two: " + std::to_string(n));
  int k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

std::size_t WaveletCoefficients::total_size() const {
  std::size_t total = coarse.size();
  for (const auto& d : detail) total += d.size();
  return total;
}

std::vector<double> WaveletCoefficients::flatten() const {
  std::vector<double> out;
  out.reserve(total_size());
  out.insert(out.end(), coarse.begin(), coarse.end());
  for (int l = levels(); l >= 1; --l) {
    const auto& d = level(l);
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

WaveletCoefficients WaveletCoefficients::zeros(std::size_t grid_size, int levels) {
  WaveletCoefficients c;
  c.grid_size = grid_size;
  c.detail.resize(static_cast<std::size_t>(levels));
  for (int l = 1; l <= levels; ++l) c.level(l).assign(grid_size >> l, 0.0);
  c.coarse.assign(grid_size >> levels, 0.0);
  return c;
}

WaveletCoefficients WaveletCoefficients::unflatten(std::span<const double> flat, std::size_t grid_size,
                                                   int levels) {
  if (flat.size() != grid_size) throw std::invalid_argument("flat coefficient vector has wrong length");
  auto c = zeros(grid_size, levels);
  auto it = flat.begin();
  std::copy_n(it, c.coarse.size(), c.coarse.begin());
  it += static_cast<std::ptrdiff_t>(c.coarse.size());
  for (int l = levels; l >= 1; --l) {
    auto& d = c.level(l);
    std::copy_n(it, d.size(), d.begin());
    it += static_cast<std::ptrdiff_t>(d.size());
  }
  return c;
}

double WaveletCoefficients::squared_norm() const {
  double s = 0.0;
  for (double v : coarse) s += v * v;
  for (const auto& d : detail)
    for (double v : d) s += v * v;
  return s;
}

MeyerSystem MeyerSystem::build(std::size_t grid_size, int levels) {
  constexpr double pi = std::numbers::pi;
  if (!is_power_of_two(grid_size))
    throw std::invalid_argument("Meyer grid size must be a power of two, got " + std::to_string(grid_size));
  if (levels < 1) throw std::invalid_argument("Meyer system needs at least one level");
  if (levels >= log2_exact(grid_size))
    throw std::invalid_argument("2^l0 must be smaller than the grid size (l0=" + std::to_string(levels) +
                                ", N=" + std::to_string(grid_size) + ")");

  MeyerSystem sys;
  sys.grid_size_ = grid_size;
  sys.levels_ = levels;

  for (int l = 1; l <= levels; ++l) {
    const std::size_t len = grid_size >> (l - 1);
    std::vector<double> h(len);
    for (std::size_t k = 0; k < len; ++k) {
      // Map bin k to ω ∈ (−π, π].
      double omega = 2.0 * pi * static_cast<double>(k) / static_cast<double>(len);
      if (omega > pi) omega -= 2.0 * pi;
      h[k] = std::sqrt(2.0) * meyer_scaling_hat(2.0 * omega);
    }
    sys.lowpass_.push_back(std::move(h));
  }

  // Composite masks on the N-point grid: after i downsamplings bin k aliases
  // onto bin k mod (N / 2^i) of the level-(i+1) filter.
  std::vector<double> scaling(grid_size, 1.0);
  for (int l = 1; l <= levels; ++l) {
    const auto& h = sys.lowpass_[static_cast<std::size_t>(l - 1)];
    const std::size_t len = h.size();
    std::vector<double> mask(grid_size);
    for (std::size_t k = 0; k < grid_size; ++k) {
      const std::size_t kk = k % len;
      const double g = h[(kk + len / 2) % len] / std::sqrt(2.0);
      mask[k] = scaling[k] * g;
      scaling[k] *= h[kk] / std::sqrt(2.0);
    }
    sys.detail_masks_.push_back(std::move(mask));
  }
  sys.coarse_mask_ = std::move(scaling);
  sys.plans_ = std::make_shared<const detail::FftPlans>(grid_size);
  return sys;
}

const std::vector<double>& MeyerSystem::detail_mask(int level) const {
  if (level < 1 || level > levels_) throw std::invalid_argument("detail level out of range");
  return detail_masks_[static_cast<std::size_t>(level - 1)];
}

WaveletCoefficients MeyerSystem::forward(std::span<const double> x) const {
  constexpr double pi = std::numbers::pi;
  if (x.size() != grid_size_)
    throw std::invalid_argument("fwt: signal length " + std::to_string(x.size()) + " does not match grid size " +
                                std::to_string(grid_size_));

  auto out = WaveletCoefficients::zeros(grid_size_, levels_);
  std::vector<cplx> spec(x.begin(), x.end());
  plans_->forward(spec);

  for (int l = 1; l <= levels_; ++l) {
    const auto& h = lowpass_[static_cast<std::size_t>(l - 1)];
    const std::size_t len = spec.size();
    const std::size_t half = len / 2;
    std::vector<cplx> low(half), high(half);
    for (std::size_t k = 0; k < half; ++k) {
      const cplx x0 = spec[k];
      const cplx x1 = spec[k + half];
      const double h0 = h[k];
      const double h1 = h[k + half];
      low[k] = 0.5 * (x0 * h0 + x1 * h1);
      const double w = 2.0 * pi * static_cast<double>(k) / static_cast<double>(len);
      high[k] = 0.5 * std::polar(1.0, w) * (x0 * h1 - x1 * h0);
    }
    plans_->backward(high);
    auto& d = out.level(l);
    for (std::size_t n = 0; n < half; ++n) d[n] = high[n].real() / static_cast<double>(half);
    spec = std::move(low);
  }

  plans_->backward(spec);
  for (std::size_t n = 0; n < spec.size(); ++n) out.coarse[n] = spec[n].real() / static_cast<double>(spec.size());
  return out;
}

std::vector<double> MeyerSystem::inverse(const WaveletCoefficients& c) const {
  constexpr double pi = std::numbers::pi;
  if (c.grid_size != grid_size_ || c.levels() != levels_ || c.coarse.size() != (grid_size_ >> levels_))
    throw std::invalid_argument("iwt: coefficients are inconsistent with the Meyer system");
  for (int l = 1; l <= levels_; ++l)
    if (c.level(l).size() != (grid_size_ >> l))
      throw std::invalid_argument("iwt: detail level " + std::to_string(l) + " has wrong length");

  std::vector<cplx> spec(c.coarse.begin(), c.coarse.end());
  plans_->forward(spec);

  for (int l = levels_; l >= 1; --l) {
    const auto& h = lowpass_[static_cast<std::size_t>(l - 1)];
    const auto& d = c.level(l);
    std::vector<cplx> dspec(d.begin(), d.end());
    plans_->forward(dspec);
    const std::size_t half = dspec.size();
    const std::size_t len = 2 * half;
    std::vector<cplx> up(len);
    for (std::size_t k = 0; k < len; ++k) {
      const std::size_t km = k % half;
      const double w = 2.0 * pi * static_cast<double>(k) / static_cast<double>(len);
      const cplx g = std::polar(1.0, -w) * h[(k + half) % len];
      up[k] = h[k] * spec[km] + g * dspec[km];
    }
    spec = std::move(up);
  }

  plans_->backward(spec);
  std::vector<double> x(grid_size_);
  for (std::size_t n = 0; n < grid_size_; ++n) x[n] = spec[n].real() / static_cast<double>(grid_size_);
  return x;
}

// Both transforms map real sequences to real sequences and are complex-linear,
// so x + iy is transformed in one pass and split afterwards.
void MeyerSystem::forward_pair(std::span<const double> x, std::span<const double> y, int skip,
                               WaveletCoefficients& cx, WaveletCoefficients& cy) const {
  constexpr double pi = std::numbers::pi;
  if (x.size() != grid_size_ || y.size() != grid_size_)
    throw std::invalid_argument("fwt: signal length does not match grid size " + std::to_string(grid_size_));
  if (skip < 0 || skip > levels_) throw std::invalid_argument("fwt: skipped levels out of range");

  cx = WaveletCoefficients::zeros(grid_size_, levels_);
  cy = WaveletCoefficients::zeros(grid_size_, levels_);
  std::vector<cplx> spec(grid_size_);
  for (std::size_t k = 0; k < grid_size_; ++k) spec[k] = {x[k], y[k]};
  plans_->forward(spec);

  for (int l = 1; l <= levels_; ++l) {
    const auto& h = lowpass_[static_cast<std::size_t>(l - 1)];
    const std::size_t len = spec.size();
    const std::size_t half = len / 2;
    std::vector<cplx> low(half);
    for (std::size_t k = 0; k < half; ++k) low[k] = 0.5 * (spec[k] * h[k] + spec[k + half] * h[k + half]);
    if (l > skip) {
      std::vector<cplx> high(half);
      for (std::size_t k = 0; k < half; ++k) {
        const double w = 2.0 * pi * static_cast<double>(k) / static_cast<double>(len);
        high[k] = 0.5 * std::polar(1.0, w) * (spec[k] * h[k + half] - spec[k + half] * h[k]);
      }
      plans_->backward(high);
      auto& dx = cx.level(l);
      auto& dy = cy.level(l);
      for (std::size_t n = 0; n < half; ++n) {
        dx[n] = high[n].real() / static_cast<double>(half);
        dy[n] = high[n].imag() / static_cast<double>(half);
      }
    }
    spec = std::move(low);
  }

  plans_->backward(spec);
  for (std::size_t n = 0; n < spec.size(); ++n) {
    cx.coarse[n] = spec[n].real() / static_cast<double>(spec.size());
    cy.coarse[n] = spec[n].imag() / static_cast<double>(spec.size());
  }
}

void MeyerSystem::inverse_pair(const WaveletCoefficients& cx, const WaveletCoefficients& cy, int skip,
                               std::vector<double>& x, std::vector<double>& y) const {
  constexpr double pi = std::numbers::pi;
  for (const auto* c : {&cx, &cy}) {
    if (c->grid_size != grid_size_ || c->levels() != levels_ || c->coarse.size() != (grid_size_ >> levels_))
      throw std::invalid_argument("iwt: coefficients are inconsistent with the Meyer system");
    for (int l = skip + 1; l <= levels_; ++l)
      if (c->level(l).size() != (grid_size_ >> l))
        throw std::invalid_argument("iwt: detail level " + std::to_string(l) + " has wrong length");
  }
  if (skip < 0 || skip > levels_) throw std::invalid_argument("iwt: skipped levels out of range");

  std::vector<cplx> spec(cx.coarse.size());
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = {cx.coarse[k], cy.coarse[k]};
  plans_->forward(spec);

  for (int l = levels_; l >= 1; --l) {
    const auto& h = lowpass_[static_cast<std::size_t>(l - 1)];
    const std::size_t half = spec.size();
    const std::size_t len = 2 * half;
    std::vector<cplx> up(len);
    if (l > skip) {
      const auto& dx = cx.level(l);
      const auto& dy = cy.level(l);
      std::vector<cplx> dspec(half);
      for (std::size_t k = 0; k < half; ++k) dspec[k] = {dx[k], dy[k]};
      plans_->forward(dspec);
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t km = k % half;
        const double w = 2.0 * pi * static_cast<double>(k) / static_cast<double>(len);
        const cplx g = std::polar(1.0, -w) * h[(k + half) % len];
        up[k] = h[k] * spec[km] + g * dspec[km];
      }
    } else {
      for (std::size_t k = 0; k < len; ++k) up[k] = h[k] * spec[k % half];
    }
    spec = std::move(up);
  }

  plans_->backward(spec);
  x.resize(grid_size_);
  y.resize(grid_size_);
  for (std::size_t n = 0; n < grid_size_; ++n) {
    x[n] = spec[n].real() / static_cast<double>(grid_size_);
    y[n] = spec[n].imag() / static_cast<double>(grid_size_);
  }
}

MeyerSystem build_meyer(std::size_t n, int l0) { return MeyerSystem::build(n, l0); }

WaveletCoefficients fwt(std::span<const double> x, const MeyerSystem& sys) { return sys.forward(x); }

std::vector<double> iwt(const WaveletCoefficients& c, const MeyerSystem& sys) { return sys.inverse(c); }

}  // namespace sparsetf
