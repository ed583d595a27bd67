#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sparsetf/alm.hpp"
#include "sparsetf/basis.hpp"

namespace sparsetf {

struct InitialGuess {
  std::vector<PhaseFunction> phases;  // sorted by increasing frequency
  std::vector<double> wavenumbers;    // cycles over the record length
  bool fallback = false;              // no usable spectral peaks were found
};

struct PeakOptions {
  std::size_t min_separation = 4;  // bins
  double min_relative_height = 0.1;
  std::size_t min_bin = 2;
};

// Linear phases at the M most prominent spectral peaks of f.
InitialGuess initial_guess(const SampledSignal& f, std::size_t m, const PeakOptions& options = {});

struct PhaseUpdate {
  PhaseFunction phase;
  double beta = 0.0;
  std::vector<double> delta_theta_prime;  // projected Δθ' before scaling by β
};

// One Gauss-Newton phase correction: Δθ' = P_{V_η(θ)}[d/dt arctan(b/a)],
// θ ← θ − βΔθ with β the largest step in [0, 1] keeping θ' ≥ floor.
// Throws DegenerateEnvelope when a² + b² vanishes on most samples.
PhaseUpdate update_phase(const ThetaFrame& frame, const EnvelopePair& env, int eta, double theta_prime_floor);

// The largest α ∈ [0, 1] with θ' − α·Δθ' ≥ floor at every sample.
double max_feasible_step(std::span<const double> theta_prime, std::span<const double> delta_theta_prime,
                         double floor);

// Constant phase γ that makes the envelope of a cos θ + b sin θ real on
// average once θ has been moved to θ − shift: γ = arg Σ (a − ib)·e^{i·shift}.
// The derivative-based update cannot see a constant phase error, so the
// driver adds γ to each updated phase. Returns 0 for a vanishing envelope.
double constant_phase_offset(const EnvelopePair& env, std::span<const double> shift);

AlmOptions outer_alm_defaults();

struct DecomposeOptions {
  std::size_t components = 1;  // M
  double eps0 = 0.0;           // 0: 1e-3·√N
  int max_outer = 50;          // per η level
  std::vector<int> eta_schedule;  // empty: l0, l0 − 1, ..., 1
  // Inner solves inside the outer loop: 20 sweeps per multiplier update, at
  // most 20 updates stopped early by the patience rule.
  AlmOptions alm = outer_alm_defaults();
  bool with_outliers = false;
  double floor_factor = 1e-3;   // θ'_floor = floor_factor · median(θ'⁰)
  double dropout_energy = 1e-8;  // relative to ‖f‖²
  bool align_offset = true;      // add constant_phase_offset() after each update
  // Inner solves stop once the residual reaches discrepancy·σ·√N. σ is
  // estimated with estimate_noise_sigma() unless given.
  std::optional<double> noise_sigma;
  double discrepancy = 1.05;
  // Debiasing sweeps used when μ is derived and the noise bound lowers it.
  int noise_debias_sweeps = 10;
  // Skip the finer η levels once a level after the first ends at the noise
  // bound without its phases converging: the phases are fitting the noise.
  bool stop_at_noise = true;
  // The stop only applies when the noise bound is at least this fraction of ‖f‖;
  // on nearly clean data the finer levels still pay off.
  double noise_stop_ratio = 0.25;
  FrameOptions frame;
  PeakOptions peaks;

  void validate() const;
};

struct Component {
  std::vector<double> a;  // envelope of the cos θ branch
  std::vector<double> b;  // residual sin θ branch; tends to zero at convergence
  PhaseFunction phase;
  std::vector<double> imf;  // a · cos θ

  // √(a² + b²)
  std::vector<double> amplitude() const;
};

struct LevelDiagnostics {
  int eta = 0;
  int outer_iterations = 0;
  bool converged = false;
  double last_change = 0.0;
};

struct Diagnostics {
  std::vector<LevelDiagnostics> levels;
  int total_outer_iterations = 0;
  int inner_solves = 0;
  int inner_unconverged = 0;
  int inner_iterations = 0;
  double mu = 0.0;
  double noise_sigma = 0.0;
  int noise_stop_eta = 0;  // level after which stop_at_noise ended the schedule, 0 if it did not
  double final_residual_norm = 0.0;
  double relative_residual = 0.0;
  bool converged = false;
  bool initial_guess_fallback = false;
  std::vector<std::size_t> dropped_components;  // indices into the initial phase list
  std::vector<std::string> warnings;
};

struct Decomposition {
  std::vector<Component> components;
  std::optional<std::vector<double>> outliers;
  std::vector<double> residual;
  Diagnostics diagnostics;
};

// Instrumentation for invariant tests.
struct DecomposeObserver {
  struct Update {
    int eta;
    int outer;
    std::size_t component;  // index into the initial phase list
    const ThetaFrame* before;
    const PhaseUpdate* update;
    double floor;
  };
  struct Outer {
    int eta;
    int outer;
    const std::vector<std::vector<double>>* components;  // modulated components, slowest first
    const std::vector<double>* outliers;                 // may be null
    const std::vector<double>* residual;
  };
  std::function<void(const Update&)> on_update;
  std::function<void(const Outer&)> on_outer;
};

Decomposition decompose(const SampledSignal& f, const std::optional<std::vector<PhaseFunction>>& init,
                        const DecomposeOptions& opts, const DecomposeObserver* observer = nullptr);

// decompose() with the impulse dictionary enabled.
Decomposition decompose_with_outliers(const SampledSignal& f, const std::optional<std::vector<PhaseFunction>>& init,
                                      DecomposeOptions opts, const DecomposeObserver* observer = nullptr);

}  // namespace sparsetf
