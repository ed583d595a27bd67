#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sparsetf/basis.hpp"
#include "sparsetf/wavelet.hpp"

namespace sparsetf {

// Soft threshold sgn(x)·max(|x| − τ, 0), elementwise. Throws on τ < 0.
std::vector<double> shrink(std::span<const double> x, double tau);
double shrink(double x, double tau);
void shrink_in_place(WaveletCoefficients& c, double tau);

// Dictionary coefficients of one component: the cos θ branch (x, ã) and the
// sin θ branch (y, b̃).
struct ComponentCoefficients {
  WaveletCoefficients a;
  WaveletCoefficients b;
};

struct ProxResult {
  ComponentCoefficients coefficients;
  EnvelopePair envelopes;  // on the time grid
};

// argmin_p ‖p‖₁ + (μ/2)‖w − Θ_θ p‖²_{2,θ}, evaluated in closed form as
// S_{1/μ}(Θ_θᵀ[θ' w]) with the wavelet transform in the θ-coordinate.
ProxResult proximal_component(std::span<const double> w, const ThetaFrame& frame, double mu);

// Least-squares coefficients of w restricted to the support of `support`
// (entries that are nonzero there), without shrinkage.
ProxResult refit_component(std::span<const double> w, const ThetaFrame& frame, const ComponentCoefficients& support);

struct AlmOptions {
  double mu = 0.0;  // 0: derived from the signal and the frames, see default_mu()
  int max_iters = 300;
  double tol = 1e-6;  // relative constraint residual
  // Also converged once ‖f − Σ components − z‖ ≤ noise_level. With noisy data
  // the iterates start fitting the noise below that level. 0 disables.
  double noise_level = 0.0;
  // Stop (not converged) once an iteration changes the reconstruction by
  // less than stall_tol·‖f‖.
  double stall_tol = 1e-9;
  // Stop (not converged) once the constraint residual has not dropped below
  // (1 − min_progress) × its best value for `patience` consecutive
  // iterations, and return the best iterate. With an infeasible constraint
  // the multiplier grows without bound and the iterates drift; this keeps the
  // least-residual state instead. patience = 0 disables the rule.
  int patience = 10;
  double min_progress = 1e-2;
  // Stop once ‖Σ components‖ or ‖z‖ exceeds divergence·‖f‖ and return the
  // best earlier iterate (all zeros if none). Large components cancelling
  // each other or the outliers keep the constraint residual small, so the
  // residual alone does not reveal this.
  double divergence = 10.0;
  // Sweeps over the components per multiplier update. 1 is the sweeping ALM;
  // larger values run the inner sweeping loop towards convergence.
  int sweeps = 1;
  double sweep_tol = 1e-12;
  // Block sweeps refitting the selected coefficients without shrinkage once
  // the iteration stops, removing the 1/μ bias of the soft threshold. The
  // support (and the outlier support) stays fixed. 0 disables.
  int debias_sweeps = 0;
};

enum class AlmStatus { kConverged, kStalled, kMaxIterations, kDiverged };
const char* to_string(AlmStatus s);

struct AlmResult {
  std::vector<EnvelopePair> envelopes;
  std::vector<ComponentCoefficients> coefficients;
  std::vector<std::vector<double>> components;  // a_j cos θ_j + b_j sin θ_j
  std::vector<double> multiplier;
  std::optional<std::vector<double>> outliers;
  std::vector<double> residual;  // f − Σ components − z
  double relative_residual = 0.0;
  double mu = 0.0;
  int iterations = 0;
  AlmStatus status = AlmStatus::kMaxIterations;

  bool converged() const { return status == AlmStatus::kConverged; }
};

// Instrumentation hooks; both are optional.
struct AlmObserver {
  struct Sweep {
    int iteration;
    std::size_t component;
    std::span<const double> residual;                 // r_j handed to the proximal step
    std::span<const std::vector<double>> components;  // component state before the update of j
    std::span<const double> outliers;                 // z before this iteration (empty without outliers)
  };
  struct Multiplier {
    int iteration;
    std::span<const double> before;
    std::span<const double> after;
    std::span<const double> constraint_residual;
  };
  std::function<void(const Sweep&)> on_sweep;
  std::function<void(const Multiplier&)> on_multiplier;
};

// Noise standard deviation as median|d|/0.6745 over the finest-scale Meyer
// coefficients d of f (of its longest power-of-two prefix). Valid when the
// components stay below a sixth of the sampling rate; sparse outliers barely
// move the median.
double estimate_noise_sigma(std::span<const double> f);

// μ = min(10 / rms(f), 1 / (3·σ·√(max θ'·dt))). The second bound puts the
// threshold 1/μ three standard deviations above the noise in the dictionary
// coefficients of the fastest component, so white noise of level σ is
// mostly shrunk away. A negative σ is estimated from f.
double default_mu(std::span<const double> f, std::span<const ThetaFrame> frames, double sigma = -1.0);

AlmResult sweeping_alm(const SampledSignal& f, std::span<const ThetaFrame> frames, const AlmOptions& opts,
                       const AlmObserver* observer = nullptr);
AlmResult sweeping_alm_outliers(const SampledSignal& f, std::span<const ThetaFrame> frames, const AlmOptions& opts,
                                const AlmObserver* observer = nullptr);

// Convenience overloads building the θ-frames from phases.
AlmResult sweeping_alm(const SampledSignal& f, std::span<const PhaseFunction> phases, const AlmOptions& opts,
                       FrameOptions frame_options = {});
AlmResult sweeping_alm_outliers(const SampledSignal& f, std::span<const PhaseFunction> phases,
                                const AlmOptions& opts, FrameOptions frame_options = {});

}  // namespace sparsetf
