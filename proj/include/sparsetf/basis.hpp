#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "sparsetf/spline.hpp"
#include "sparsetf/wavelet.hpp"

namespace sparsetf {

// Uniformly sampled real signal: values[i] = f(t0 + i·dt).
struct SampledSignal {
  std::vector<double> values;
  double t0 = 0.0;
  double dt = 1.0;

  std::size_t size() const { return values.size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  std::vector<double> times() const;

  // Throws std::invalid_argument unless N ≥ 16, dt > 0 and all values are finite.
  void validate() const;
};

// Strictly increasing phase θ(t_i) with its derivative θ'(t_i), on a grid of spacing dt.
class PhaseFunction {
 public:
  PhaseFunction() = default;
  // Throws InvalidPhase if θ is not strictly increasing or θ' is not positive.
  PhaseFunction(std::vector<double> theta, std::vector<double> theta_prime, double dt);

  // θ' from finite differences of θ.
  static PhaseFunction from_theta(std::vector<double> theta, double dt);
  // θ(t_i) = offset + omega·i·dt.
  static PhaseFunction linear(std::size_t n, double dt, double omega, double offset = 0.0);

  std::size_t size() const { return theta_.size(); }
  double dt() const { return dt_; }
  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& theta_prime() const { return theta_prime_; }

  // θ one step past the last sample, θ_{N-1} + θ'_{N-1}·dt. The θ-grid is
  // periodic with this end point identified with θ_0.
  double end_value() const { return theta_.back() + theta_prime_.back() * dt_; }

  // True if central differences of θ agree with θ' within `tolerance`
  // (relative) at every interior sample.
  bool is_consistent(double tolerance = 0.05) const;

 private:
  std::vector<double> theta_;
  std::vector<double> theta_prime_;
  double dt_ = 1.0;
};

// Uniform periodic grid in the θ-coordinate: nodes θ_min + span·k/size, k < size.
struct ThetaGrid {
  double theta_min = 0.0;
  double span = 0.0;
  std::size_t size = 0;

  double spacing() const { return span / static_cast<double>(size); }
  double node(std::size_t k) const { return theta_min + spacing() * static_cast<double>(k); }
  std::vector<double> nodes() const;
  // L_θ, the number of carrier periods covered by the grid.
  double num_periods() const;
};

// Envelopes of the cos θ and sin θ branches of one component.
struct EnvelopePair {
  std::vector<double> a;
  std::vector<double> b;
};

ThetaGrid make_theta_grid(const PhaseFunction& phase, std::size_t n_theta);

// Cubic-spline transport between the time grid and a θ-grid built from the same phase.
std::vector<double> to_theta(std::span<const double> x, const PhaseFunction& phase, const ThetaGrid& grid);
std::vector<double> from_theta(std::span<const double> y, const PhaseFunction& phase, const ThetaGrid& grid);

// Σ g_i h_i θ'(t_i) dt, a quadrature of ∫ g h dθ.
double weighted_inner(std::span<const double> g, std::span<const double> h, const PhaseFunction& phase);

struct FrameOptions {
  std::size_t n_theta = 0;  // 0: smallest power of two ≥ N
  int l0 = 0;               // 0: floor(log2 L_θ), clamped to what the grid allows
};

// The θ-coordinate of one phase function together with its envelope wavelet
// dictionary Π_θ.
//
// The discrete Meyer system on the θ-grid has fine_levels() + l0() levels.
// Its finest fine_levels() detail levels resolve frequencies at or above the
// carrier and are not part of the envelope dictionary; the remaining levels
// 1..l0 (discrete levels fine_levels()+1 ..) and the coarse block span
// envelopes whose spectrum lies strictly below the carrier frequency. With
// that choice the columns √2 cos θ·Π_θ and √2 sin θ·Π_θ are orthonormal under
// the weighted inner product.
class ThetaFrame {
 public:
  explicit ThetaFrame(PhaseFunction phase, FrameOptions options = {});

  const PhaseFunction& phase() const { return phase_; }
  const ThetaGrid& grid() const { return grid_; }
  const MeyerSystem& system() const { return *system_; }
  std::size_t time_size() const { return phase_.size(); }
  int fine_levels() const { return fine_levels_; }
  int l0() const { return l0_; }
  // Envelope coefficients per branch: grid.size / 2^fine_levels.
  std::size_t envelope_size() const;

  std::vector<double> to_theta(std::span<const double> x) const;
  std::vector<double> from_theta(std::span<const double> y) const;
  double weighted_inner(std::span<const double> g, std::span<const double> h) const;

  const std::vector<double>& time_cos() const { return time_cos_; }
  const std::vector<double>& time_sin() const { return time_sin_; }

  // Wavelet coefficients of a θ-grid sequence, normalized so the wavelets are
  // orthonormal in L²(dθ).
  WaveletCoefficients analyze_grid(std::span<const double> y) const;
  std::vector<double> synthesize_grid(const WaveletCoefficients& c) const;

  // Zero every coefficient outside V_η: detail levels 1..η of the envelope
  // dictionary and all discarded fine levels. η = 0 keeps the full dictionary.
  void restrict_to(WaveletCoefficients& c, int eta) const;

  // Θ_θᵀ·[θ' w]: dictionary coefficients of a time-domain sequence (cos
  // branch first, sin branch second), restricted to the envelope dictionary.
  // This is the exact adjoint of envelopes() followed by modulate().
  std::pair<WaveletCoefficients, WaveletCoefficients> dictionary_coefficients(std::span<const double> w) const;

  // Time-domain envelopes (a, b) of a pair of coefficient blocks whose
  // discarded fine levels are zero.
  EnvelopePair envelopes(const WaveletCoefficients& ca, const WaveletCoefficients& cb) const;

  // Envelope on the θ-grid represented by a coefficient block (a_θ = Π_θ·p).
  std::vector<double> envelope_on_grid(const WaveletCoefficients& c) const;

  // a cos θ + b sin θ on the time grid.
  std::vector<double> modulate(const EnvelopePair& env) const;

  // P_{V_η(θ)} x for a time-domain sequence.
  std::vector<double> project(std::span<const double> x, int eta) const;
  // P_{V_η(θ)} on θ-grid samples, without transport.
  std::vector<double> project_grid(std::span<const double> y, int eta) const;

  // Column of the explicit dictionary Θ_θ on the time grid. `index` is a flat
  // envelope coefficient index in [0, envelope_size()); sine selects the
  // sin θ branch.
  std::vector<double> dictionary_column(std::size_t index, bool sine) const;
  // Flat envelope coefficient vector <-> full coefficient layout.
  std::vector<double> pack_envelope(const WaveletCoefficients& c) const;
  WaveletCoefficients unpack_envelope(std::span<const double> flat) const;

 private:
  PhaseFunction phase_;
  ThetaGrid grid_;
  int fine_levels_ = 0;
  int l0_ = 0;
  std::shared_ptr<const MeyerSystem> system_;
  std::shared_ptr<const SplineResampler> time_to_grid_;
  std::shared_ptr<const SplineResampler> grid_to_time_;
  std::vector<double> time_cos_, time_sin_;
};

std::vector<double> project_coarse(std::span<const double> x, const ThetaFrame& frame, int eta);

// Default l0 rule for a grid: floor(log2 L_θ) clamped to [1, log2(N_θ) − 3].
int default_l0(const ThetaGrid& grid);

}  // namespace sparsetf
