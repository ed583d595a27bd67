#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace sparsetf {

// Meyer auxiliary polynomial ν(x) = x⁴(35 − 84x + 70x² − 20x³), clamped to [0, 1].
double meyer_nu(double x);

// |φ̂(ξ)| for the canonical Meyer scaling function; supported on |ξ| < 4π/3.
double meyer_scaling_hat(double xi);

// Wavelet/scaling coefficients of a periodic sequence of length N.
//
// detail[l-1] holds the level-l coefficients (N / 2^l translates) for
// l = 1..levels; coarse holds the N / 2^levels scaling coefficients.
struct WaveletCoefficients {
  std::size_t grid_size = 0;
  std::vector<std::vector<double>> detail;
  std::vector<double> coarse;

  int levels() const { return static_cast<int>(detail.size()); }
  std::size_t total_size() const;

  std::vector<double>& level(int l) { return detail.at(static_cast<std::size_t>(l - 1)); }
  const std::vector<double>& level(int l) const { return detail.at(static_cast<std::size_t>(l - 1)); }

  // Flat layout: coarse, then detail levels from coarsest (levels) to finest (1).
  std::vector<double> flatten() const;
  static WaveletCoefficients unflatten(std::span<const double> flat, std::size_t grid_size, int levels);
  static WaveletCoefficients zeros(std::size_t grid_size, int levels);

  double squared_norm() const;
};

namespace detail {
class FftPlans;
// Serializes fftw planner calls, which are not thread-safe.
std::mutex& planner_mutex();
}

// Periodic orthonormal Meyer wavelet system on a grid of N = 2^J points.
//
// The transform is a two-channel orthonormal filter bank evaluated in the
// Fourier domain, with low-pass response H(ω) = √2 φ̂(2ω) and high-pass
// G(ω) = e^{-iω} H(ω + π). Both filters are real in time. Immutable after
// construction; forward()/inverse() may be called concurrently.
class MeyerSystem {
 public:
  static MeyerSystem build(std::size_t grid_size, int levels);

  std::size_t grid_size() const { return grid_size_; }
  int levels() const { return levels_; }
  // Half-width s_φ of supp(φ̂) in the canonical normalization.
  static constexpr double support_halfwidth() { return 4.0 * 3.14159265358979323846 / 3.0; }

  // Composite Fourier-domain magnitudes on the N DFT bins.
  // detail_mask(l) is |ψ̂_l|, coarse_mask() is |φ̂_levels|.
  const std::vector<double>& detail_mask(int level) const;
  const std::vector<double>& coarse_mask() const { return coarse_mask_; }

  WaveletCoefficients forward(std::span<const double> x) const;
  std::vector<double> inverse(const WaveletCoefficients& c) const;

  // Transforms of two signals at once, skipping the detail levels 1..skip:
  // forward_pair leaves them zero, inverse_pair treats them as zero.
  void forward_pair(std::span<const double> x, std::span<const double> y, int skip, WaveletCoefficients& cx,
                    WaveletCoefficients& cy) const;
  void inverse_pair(const WaveletCoefficients& cx, const WaveletCoefficients& cy, int skip, std::vector<double>& x,
                    std::vector<double>& y) const;

 private:
  MeyerSystem() = default;

  std::size_t grid_size_ = 0;
  int levels_ = 0;
  // lowpass_[l-1]: H sampled on the DFT bins of the level-l input (length N / 2^(l-1)).
  std::vector<std::vector<double>> lowpass_;
  std::vector<std::vector<double>> detail_masks_;
  std::vector<double> coarse_mask_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

MeyerSystem build_meyer(std::size_t n, int l0);
WaveletCoefficients fwt(std::span<const double> x, const MeyerSystem& sys);
std::vector<double> iwt(const WaveletCoefficients& c, const MeyerSystem& sys);

bool is_power_of_two(std::size_t n);
int log2_exact(std::size_t n);

}  // namespace sparsetf
