#include "sparsetf/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <stdexcept>
#include <string>

#include "sparsetf/errors.hpp"
#include "sparsetf/numerics.hpp"

namespace sparsetf {

namespace {

// |DFT| of a real sequence for bins 0..N/2.
std::vector<double> magnitude_spectrum(std::span<const double> x) {
  const auto n = static_cast<int>(x.size());
  std::vector<double> in(x.begin(), x.end());
  std::vector<fftw_complex> out(x.size() / 2 + 1);
  fftw_plan plan;
  {
    std::lock_guard lock(detail::planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(), FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(detail::planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> mag(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) mag[k] = std::hypot(out[k][0], out[k][1]);
  return mag;
}

}  // namespace

InitialGuess initial_guess(const SampledSignal& f, std::size_t m, const PeakOptions& options) {
  f.validate();
  if (m < 1) throw std::invalid_argument("initial_guess needs M ≥ 1");
  const std::size_t n = f.size();
  const auto mag = magnitude_spectrum(f.values);
  const std::size_t last = mag.size() - 1;

  double global = 0.0;
  for (std::size_t k = options.min_bin; k <= last; ++k) global = std::max(global, mag[k]);

  std::vector<std::size_t> candidates;
  if (global > 0.0) {
    for (std::size_t k = options.min_bin; k <= last; ++k) {
      const bool left = k == 0 || mag[k] >= mag[k - 1];
      const bool right = k == last || mag[k] >= mag[k + 1];
      if (left && right && mag[k] >= options.min_relative_height * global) candidates.push_back(k);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });

  std::vector<std::size_t> picked;
  for (std::size_t k : candidates) {
    if (picked.size() == m) break;
    const bool separated = std::all_of(picked.begin(), picked.end(), [&](std::size_t p) {
      return (k > p ? k - p : p - k) >= options.min_separation;
    });
    if (separated) picked.push_back(k);
  }

  InitialGuess guess;
  std::vector<double> wavenumbers;
  if (picked.size() == m) {
    for (std::size_t k : picked) wavenumbers.push_back(static_cast<double>(k));
  } else {
    guess.fallback = true;
    double lo = static_cast<double>(options.min_bin);
    double hi = static_cast<double>(n) / 4.0;
    if (global > 0.0) {
      std::size_t klo = last, khi = options.min_bin;
      for (std::size_t k = options.min_bin; k <= last; ++k) {
        if (mag[k] >= options.min_relative_height * global) {
          klo = std::min(klo, k);
          khi = std::max(khi, k);
        }
      }
      if (khi > klo) {
        lo = static_cast<double>(klo);
        hi = static_cast<double>(khi);
      }
    }
    for (std::size_t j = 0; j < m; ++j)
      wavenumbers.push_back(lo + (hi - lo) * static_cast<double>(j + 1) / static_cast<double>(m + 1));
  }
  std::sort(wavenumbers.begin(), wavenumbers.end());

  const double record = static_cast<double>(n) * f.dt;
  for (double k : wavenumbers) {
    guess.phases.push_back(PhaseFunction::linear(n, f.dt, 2.0 * std::numbers::pi * k / record));
  }
  guess.wavenumbers = std::move(wavenumbers);
  return guess;
}

double max_feasible_step(std::span<const double> theta_prime, std::span<const double> delta_theta_prime,
                         double floor) {
  if (theta_prime.size() != delta_theta_prime.size()) throw std::invalid_argument("step: length mismatch");
  double beta = 1.0;
  for (std::size_t i = 0; i < theta_prime.size(); ++i) {
    if (delta_theta_prime[i] > 0.0) beta = std::min(beta, (theta_prime[i] - floor) / delta_theta_prime[i]);
  }
  return std::clamp(beta, 0.0, 1.0);
}

PhaseUpdate update_phase(const ThetaFrame& frame, const EnvelopePair& env, int eta, double theta_prime_floor) {
  const auto& phase = frame.phase();
  const std::size_t n = phase.size();
  if (env.a.size() != n || env.b.size() != n) throw std::invalid_argument("update_phase: envelope length mismatch");

  const auto& sa = env.a;
  const auto& sb = env.b;
  std::vector<double> energy(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    energy[i] = sa[i] * sa[i] + sb[i] * sb[i];
    peak = std::max(peak, energy[i]);
  }
  const double tiny = 1e-12 * peak;
  const auto small = static_cast<std::size_t>(
      std::count_if(energy.begin(), energy.end(), [&](double e) { return e <= tiny; }));
  if (peak == 0.0 || 2 * small > n) throw DegenerateEnvelope("component envelope vanished");

  const auto da = differentiate(sa, phase.dt());
  const auto db = differentiate(sb, phase.dt());
  std::vector<double> rate(n);
  for (std::size_t i = 0; i < n; ++i) rate[i] = (sa[i] * db[i] - sb[i] * da[i]) / (energy[i] + tiny);

  PhaseUpdate up;
  up.delta_theta_prime = frame.project(rate, eta);
  const auto delta_theta = cumulative_trapezoid(up.delta_theta_prime, phase.dt());
  up.beta = max_feasible_step(phase.theta_prime(), up.delta_theta_prime, theta_prime_floor);

  std::vector<double> theta(n), tp(n);
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = phase.theta()[i] - up.beta * delta_theta[i];
    tp[i] = phase.theta_prime()[i] - up.beta * up.delta_theta_prime[i];
  }
  up.phase = PhaseFunction(std::move(theta), std::move(tp), phase.dt());
  return up;
}

double constant_phase_offset(const EnvelopePair& env, std::span<const double> shift) {
  if (env.a.size() != env.b.size() || env.a.size() != shift.size())
    throw std::invalid_argument("constant_phase_offset: length mismatch");
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < shift.size(); ++i)
    acc += std::complex<double>(env.a[i], -env.b[i]) * std::polar(1.0, shift[i]);
  return std::abs(acc) > 0.0 ? std::arg(acc) : 0.0;
}

AlmOptions outer_alm_defaults() {
  AlmOptions o;
  o.sweeps = 20;
  o.max_iters = 20;
  return o;
}

void DecomposeOptions::validate() const {
  if (components < 1) throw std::invalid_argument("M must be at least 1");
  if (eps0 < 0.0) throw std::invalid_argument("ε₀ must be positive");
  if (max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");
  for (std::size_t i = 0; i < eta_schedule.size(); ++i) {
    if (eta_schedule[i] < 1) throw std::invalid_argument("η values must be at least 1");
    if (i > 0 && eta_schedule[i] >= eta_schedule[i - 1])
      throw std::invalid_argument("η schedule must be strictly decreasing");
  }
  if (!(floor_factor > 0.0 && floor_factor < 1.0)) throw std::invalid_argument("floor factor must be in (0, 1)");
  if (noise_sigma && !(*noise_sigma >= 0.0)) throw std::invalid_argument("noise level must be nonnegative");
  if (!(discrepancy >= 1.0)) throw std::invalid_argument("discrepancy factor must be at least 1");
  if (noise_debias_sweeps < 0) throw std::invalid_argument("debias sweeps must be nonnegative");
  if (!(noise_stop_ratio >= 0.0)) throw std::invalid_argument("noise stop ratio must be nonnegative");
}

std::vector<double> Component::amplitude() const {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::hypot(a[i], b[i]);
  return out;
}

namespace {

struct Tracked {
  ThetaFrame frame;
  std::size_t original_index;
  double floor;
};

AlmResult inner_solve(const SampledSignal& f, const std::vector<Tracked>& comps, const AlmOptions& alm,
                      bool outliers) {
  std::vector<ThetaFrame> frames;
  frames.reserve(comps.size());
  for (const auto& c : comps) frames.push_back(c.frame);
  return outliers ? sweeping_alm_outliers(f, frames, alm) : sweeping_alm(f, frames, alm);
}

}  // namespace

Decomposition decompose(const SampledSignal& f, const std::optional<std::vector<PhaseFunction>>& init,
                        const DecomposeOptions& opts, const DecomposeObserver* observer) {
  f.validate();
  opts.validate();
  const std::size_t n = f.size();

  Decomposition out;
  auto& diag = out.diagnostics;

  std::vector<PhaseFunction> start;
  if (init) {
    start = *init;
    if (start.size() != opts.components)
      throw std::invalid_argument("initial guess has " + std::to_string(start.size()) + " phases, M=" +
                                  std::to_string(opts.components));
  } else {
    auto guess = initial_guess(f, opts.components, opts.peaks);
    diag.initial_guess_fallback = guess.fallback;
    if (guess.fallback) diag.warnings.emplace_back("no usable spectral peaks; equispaced initial wavenumbers");
    start = std::move(guess.phases);
  }

  std::vector<Tracked> comps;
  for (std::size_t j = 0; j < start.size(); ++j) {
    if (start[j].size() != n) throw InvalidPhase("initial phase length does not match the signal");
    if (std::abs(start[j].dt() - f.dt) > 1e-12 * f.dt) throw InvalidPhase("initial phase uses a different dt");
    const double floor = opts.floor_factor * median(start[j].theta_prime());
    comps.push_back({ThetaFrame(start[j], opts.frame), j, floor});
  }
  // Sweep from the slowest to the fastest component whatever order the caller
  // used, so that permuting the initial phases only permutes the output.
  std::stable_sort(comps.begin(), comps.end(), [](const Tracked& x, const Tracked& y) {
    return median(x.frame.phase().theta_prime()) < median(y.frame.phase().theta_prime());
  });

  const double eps0 = opts.eps0 > 0.0 ? opts.eps0 : 1e-3 * std::sqrt(static_cast<double>(n));
  AlmOptions alm = opts.alm;
  diag.noise_sigma = opts.noise_sigma ? *opts.noise_sigma : estimate_noise_sigma(f.values);
  if (!(alm.mu > 0.0)) {
    std::vector<ThetaFrame> frames;
    for (const auto& c : comps) frames.push_back(c.frame);
    alm.mu = default_mu(f.values, frames, diag.noise_sigma);
    // The noise bound raised the threshold; refit to remove its bias.
    if (alm.mu < default_mu(f.values, frames, 0.0)) alm.debias_sweeps = std::max(alm.debias_sweeps, opts.noise_debias_sweeps);
  }
  diag.mu = alm.mu;
  alm.noise_level = std::max(alm.noise_level, opts.discrepancy * diag.noise_sigma * std::sqrt(static_cast<double>(n)));
  const double f_energy = dot(f.values, f.values);

  std::vector<int> schedule = opts.eta_schedule;
  if (schedule.empty()) {
    int top = 1;
    for (const auto& c : comps) top = std::max(top, c.frame.l0());
    for (int eta = top; eta >= 1; --eta) schedule.push_back(eta);
  }

  auto drop = [&](std::size_t pos, const std::string& why) {
    diag.dropped_components.push_back(comps[pos].original_index);
    diag.warnings.push_back("component " + std::to_string(comps[pos].original_index) + " dropped: " + why);
    comps.erase(comps.begin() + static_cast<std::ptrdiff_t>(pos));
  };

  bool any_inner_converged = false;
  for (int eta : schedule) {
    LevelDiagnostics level;
    level.eta = eta;
    double last_residual = INFINITY;
    for (int outer = 1; outer <= opts.max_outer && !comps.empty(); ++outer) {
      auto inner = inner_solve(f, comps, alm, opts.with_outliers);
      last_residual = norm2(inner.residual);
      ++diag.inner_solves;
      diag.inner_iterations += inner.iterations;
      if (inner.converged())
        any_inner_converged = true;
      else
        ++diag.inner_unconverged;

      if (observer && observer->on_outer) {
        const std::vector<double>* z = inner.outliers ? &*inner.outliers : nullptr;
        observer->on_outer({eta, outer, &inner.components, z, &inner.residual});
      }

      double change = 0.0;
      std::vector<std::size_t> vanished;
      for (std::size_t j = 0; j < comps.size(); ++j) {
        if (dot(inner.components[j], inner.components[j]) < opts.dropout_energy * f_energy) {
          vanished.push_back(j);
          continue;
        }
        const int eta_j = std::min(eta, comps[j].frame.l0());
        PhaseUpdate up;
        try {
          up = update_phase(comps[j].frame, inner.envelopes[j], eta_j, comps[j].floor);
        } catch (const DegenerateEnvelope&) {
          vanished.push_back(j);
          continue;
        }
        if (opts.align_offset) {
          std::vector<double> shift(n);
          for (std::size_t i = 0; i < n; ++i) shift[i] = comps[j].frame.phase().theta()[i] - up.phase.theta()[i];
          const double gamma = constant_phase_offset(inner.envelopes[j], shift);
          auto theta = up.phase.theta();
          for (auto& v : theta) v += gamma;
          up.phase = PhaseFunction(std::move(theta), up.phase.theta_prime(), up.phase.dt());
        }
        if (observer && observer->on_update)
          observer->on_update({eta, outer, comps[j].original_index, &comps[j].frame, &up, comps[j].floor});
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = up.phase.theta()[i] - comps[j].frame.phase().theta()[i];
          d2 += d * d;
        }
        try {
          ThetaFrame next(up.phase, opts.frame);
          comps[j].frame = std::move(next);
          change += std::sqrt(d2);
        } catch (const InvalidPhase& e) {
          diag.warnings.push_back("phase update rejected for component " +
                                  std::to_string(comps[j].original_index) + ": " + e.what());
        }
      }
      for (auto it = vanished.rbegin(); it != vanished.rend(); ++it) drop(*it, "envelope vanished");

      level.outer_iterations = outer;
      level.last_change = change;
      ++diag.total_outer_iterations;
      if (change <= eps0) {
        level.converged = true;
        break;
      }
    }
    diag.levels.push_back(level);
    // Past the first level (which locks on from the initial guess), phases that
    // keep moving while the residual already sits at the noise bound are
    // chasing noise, and finer levels would only give them more freedom.
    const bool at_noise = alm.noise_level > 0.0 && alm.noise_level >= opts.noise_stop_ratio * norm2(f.values) &&
                          last_residual <= alm.noise_level;
    if (opts.stop_at_noise && diag.levels.size() > 1 && at_noise && !level.converged) {
      diag.noise_stop_eta = eta;
      break;
    }
  }

  if (comps.empty()) throw DegenerateEnvelope("every component vanished");

  auto final_solve = inner_solve(f, comps, alm, opts.with_outliers);
  ++diag.inner_solves;
  diag.inner_iterations += final_solve.iterations;
  if (final_solve.converged())
    any_inner_converged = true;
  else
    ++diag.inner_unconverged;

  out.residual = f.values;
  std::vector<std::size_t> order(comps.size());
  for (std::size_t j = 0; j < comps.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return comps[x].original_index < comps[y].original_index; });
  for (std::size_t j : order) {
    Component c;
    c.a = std::move(final_solve.envelopes[j].a);
    c.b = std::move(final_solve.envelopes[j].b);
    c.phase = comps[j].frame.phase();
    const auto& carrier = comps[j].frame.time_cos();
    c.imf.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      c.imf[i] = c.a[i] * carrier[i];
      out.residual[i] -= c.imf[i];
    }
    out.components.push_back(std::move(c));
  }
  if (final_solve.outliers) {
    out.outliers = std::move(final_solve.outliers);
    for (std::size_t i = 0; i < n; ++i) out.residual[i] -= (*out.outliers)[i];
  }

  diag.final_residual_norm = norm2(out.residual);
  const double fn = norm2(f.values);
  diag.relative_residual = fn > 0.0 ? diag.final_residual_norm / fn : diag.final_residual_norm;
  diag.converged = any_inner_converged || diag.inner_unconverged < diag.inner_solves;
  if (diag.inner_unconverged == diag.inner_solves) diag.converged = false;
  return out;
}

Decomposition decompose_with_outliers(const SampledSignal& f, const std::optional<std::vector<PhaseFunction>>& init,
                                      DecomposeOptions opts, const DecomposeObserver* observer) {
  opts.with_outliers = true;
  return decompose(f, init, opts, observer);
}

}  // namespace sparsetf
