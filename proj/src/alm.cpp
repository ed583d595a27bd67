#include "sparsetf/alm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sparsetf/errors.hpp"
#include "sparsetf/numerics.hpp"

namespace sparsetf {

double shrink(double x, double tau) {
  if (tau < 0.0) throw std::invalid_argument("shrink: threshold must be nonnegative");
  const double m = std::abs(x) - tau;
  if (m <= 0.0) return 0.0;
  return std::copysign(m, x);
}

std::vector<double> shrink(std::span<const double> x, double tau) {
  if (tau < 0.0) throw std::invalid_argument("shrink: threshold must be nonnegative");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = shrink(x[i], tau);
  return out;
}

void shrink_in_place(WaveletCoefficients& c, double tau) {
  if (tau < 0.0) throw std::invalid_argument("shrink: threshold must be nonnegative");
  for (auto& v : c.coarse) v = shrink(v, tau);
  for (auto& d : c.detail)
    for (auto& v : d) v = shrink(v, tau);
}

ProxResult proximal_component(std::span<const double> w, const ThetaFrame& frame, double mu) {
  if (!(mu > 0.0)) throw std::invalid_argument("proximal_component: μ must be positive");
  auto [ca, cb] = frame.dictionary_coefficients(w);
  shrink_in_place(ca, 1.0 / mu);
  shrink_in_place(cb, 1.0 / mu);
  auto env = frame.envelopes(ca, cb);
  return {{std::move(ca), std::move(cb)}, std::move(env)};
}

namespace {

void keep_support(WaveletCoefficients& c, const WaveletCoefficients& support) {
  for (std::size_t k = 0; k < c.coarse.size(); ++k)
    if (support.coarse[k] == 0.0) c.coarse[k] = 0.0;
  for (int l = 1; l <= c.levels(); ++l) {
    auto& d = c.level(l);
    const auto& s = support.level(l);
    for (std::size_t k = 0; k < d.size(); ++k)
      if (s[k] == 0.0) d[k] = 0.0;
  }
}

}  // namespace

ProxResult refit_component(std::span<const double> w, const ThetaFrame& frame, const ComponentCoefficients& support) {
  auto [ca, cb] = frame.dictionary_coefficients(w);
  keep_support(ca, support.a);
  keep_support(cb, support.b);
  auto env = frame.envelopes(ca, cb);
  return {{std::move(ca), std::move(cb)}, std::move(env)};
}

const char* to_string(AlmStatus s) {
  switch (s) {
    case AlmStatus::kConverged:
      return "converged";
    case AlmStatus::kStalled:
      return "stalled";
    case AlmStatus::kMaxIterations:
      return "max-iterations";
    case AlmStatus::kDiverged:
      return "diverged";
  }
  return "unknown";
}

double estimate_noise_sigma(std::span<const double> f) {
  if (f.size() < 16) throw std::invalid_argument("noise estimate needs at least 16 samples");
  std::size_t n = 1;
  while (2 * n <= f.size()) n *= 2;
  const auto sys = MeyerSystem::build(n, 1);
  auto d = sys.forward(f.first(n)).level(1);
  for (auto& v : d) v = std::abs(v);
  return median(std::move(d)) / 0.6744897501960817;
}

double default_mu(std::span<const double> f, std::span<const ThetaFrame> frames, double sigma) {
  if (frames.empty()) throw std::invalid_argument("default_mu needs at least one frame");
  const double rms = norm2(f) / std::sqrt(static_cast<double>(f.size()));
  if (!(rms > 0.0)) return 10.0;
  if (sigma < 0.0) sigma = estimate_noise_sigma(f);
  double fastest = 0.0;
  for (const auto& fr : frames) {
    const auto& tp = fr.phase().theta_prime();
    fastest = std::max(fastest, *std::max_element(tp.begin(), tp.end()) * fr.phase().dt());
  }
  const double noise = 3.0 * sigma * std::sqrt(fastest);
  return std::min(10.0 / rms, noise > 0.0 ? 1.0 / noise : 10.0 / rms);
}

namespace {

void check_frames(const SampledSignal& f, std::span<const ThetaFrame> frames) {
  f.validate();
  if (frames.empty()) throw std::invalid_argument("sweeping ALM needs at least one component");
  for (const auto& fr : frames)
    if (fr.time_size() != f.size()) throw InvalidPhase("phase length does not match the signal");
}

AlmResult run_alm(const SampledSignal& f, std::span<const ThetaFrame> frames, const AlmOptions& opts,
                  const AlmObserver* observer, bool with_outliers) {
  check_frames(f, frames);
  if (opts.max_iters < 1) throw std::invalid_argument("ALM needs max_iters ≥ 1");
  if (!(opts.tol > 0.0)) throw std::invalid_argument("ALM tolerance must be positive");
  if (opts.sweeps < 1) throw std::invalid_argument("ALM needs at least one sweep per iteration");
  if (!(opts.noise_level >= 0.0)) throw std::invalid_argument("ALM noise level must be nonnegative");
  if (opts.debias_sweeps < 0) throw std::invalid_argument("debias sweeps must be nonnegative");
  if (!(opts.divergence > 1.0)) throw std::invalid_argument("divergence bound must exceed 1");

  const std::size_t n = f.size();
  const std::size_t m = frames.size();
  const double mu = opts.mu > 0.0 ? opts.mu : default_mu(f.values, frames);
  const double f_norm = norm2(f.values);
  const double scale = f_norm > 0.0 ? f_norm : 1.0;

  AlmResult res;
  res.mu = mu;
  res.envelopes.assign(m, EnvelopePair{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)});
  res.coefficients.resize(m);
  res.components.assign(m, std::vector<double>(n, 0.0));
  res.multiplier.assign(n, 0.0);
  std::vector<double> z(with_outliers ? n : 0, 0.0);
  std::vector<double> total(n, 0.0);  // Σ components
  std::vector<double> r(n), w(n), residual(n);

  struct Snapshot {
    std::vector<EnvelopePair> envelopes;
    std::vector<ComponentCoefficients> coefficients;
    std::vector<std::vector<double>> components;
    std::vector<double> multiplier, z, residual;
    double norm = std::numeric_limits<double>::infinity();
    int iteration = 0;
  } best{res.envelopes, res.coefficients, res.components, res.multiplier, z, f.values, f_norm, 0};
  int since_best = 0;
  bool use_best = false;

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    std::vector<double> previous_total = total;
    std::vector<double> previous_z = z;

    for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
      double sweep_change = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        auto& cj = res.components[j];
        for (std::size_t i = 0; i < n; ++i) {
          r[i] = f.values[i] - (total[i] - cj[i]);
          if (with_outliers) r[i] -= z[i];
        }
        if (observer && observer->on_sweep)
          observer->on_sweep({iter, j, r, res.components, z});
        for (std::size_t i = 0; i < n; ++i) w[i] = r[i] + res.multiplier[i] / mu;

        auto prox = proximal_component(w, frames[j], mu);
        auto updated = frames[j].modulate(prox.envelopes);
        for (std::size_t i = 0; i < n; ++i) {
          const double d = updated[i] - cj[i];
          sweep_change += d * d;
          total[i] += d;
        }
        cj = std::move(updated);
        res.envelopes[j] = std::move(prox.envelopes);
        res.coefficients[j] = std::move(prox.coefficients);
      }
      if (std::sqrt(sweep_change) <= opts.sweep_tol * scale) break;
    }

    if (with_outliers) {
      for (std::size_t i = 0; i < n; ++i) z[i] = shrink(f.values[i] - total[i] + res.multiplier[i] / mu, 1.0 / mu);
    }
    for (std::size_t i = 0; i < n; ++i) residual[i] = f.values[i] - total[i] - (with_outliers ? z[i] : 0.0);

    std::vector<double> q_before;
    if (observer && observer->on_multiplier) q_before = res.multiplier;
    for (std::size_t i = 0; i < n; ++i) res.multiplier[i] += mu * residual[i];
    if (observer && observer->on_multiplier)
      observer->on_multiplier({iter, q_before, res.multiplier, residual});

    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = total[i] - previous_total[i] + (with_outliers ? z[i] - previous_z[i] : 0.0);
      change += d * d;
    }
    change = std::sqrt(change);

    res.iterations = iter;
    res.relative_residual = norm2(residual) / scale;
    if (norm2(total) > opts.divergence * scale || (with_outliers && norm2(z) > opts.divergence * scale)) {
      res.status = AlmStatus::kDiverged;
      use_best = true;
      break;
    }
    if (res.relative_residual <= opts.tol || norm2(residual) <= opts.noise_level) {
      res.status = AlmStatus::kConverged;
      break;
    }
    if (iter > 1 && change <= opts.stall_tol * scale) {
      res.status = AlmStatus::kStalled;
      break;
    }
    const double rn = norm2(residual);
    if (rn < (1.0 - opts.min_progress) * best.norm)
      since_best = 0;
    else
      ++since_best;
    if (rn < best.norm) best = {res.envelopes, res.coefficients, res.components, res.multiplier, z, residual, rn, iter};
    if (opts.patience > 0 && since_best >= opts.patience) {
      res.status = AlmStatus::kStalled;
      use_best = true;
      break;
    }
  }

  if (use_best && best.iteration != res.iterations) {
    res.envelopes = std::move(best.envelopes);
    res.coefficients = std::move(best.coefficients);
    res.components = std::move(best.components);
    res.multiplier = std::move(best.multiplier);
    z = std::move(best.z);
    residual = std::move(best.residual);
    res.relative_residual = best.norm / scale;
    std::fill(total.begin(), total.end(), 0.0);
    for (const auto& c : res.components)
      for (std::size_t i = 0; i < n; ++i) total[i] += c[i];
  }
  const bool has_support = !res.coefficients.empty() && res.coefficients.front().a.grid_size != 0;
  if (opts.debias_sweeps > 0 && has_support) {
    // Unshrunk block sweeps on the fixed support; the outlier entries refit to
    // the residual at their own samples.
    for (int sweep = 0; sweep < opts.debias_sweeps; ++sweep) {
      for (std::size_t j = 0; j < m; ++j) {
        auto& cj = res.components[j];
        for (std::size_t i = 0; i < n; ++i) {
          r[i] = f.values[i] - (total[i] - cj[i]);
          if (with_outliers) r[i] -= z[i];
        }
        auto fit = refit_component(r, frames[j], res.coefficients[j]);
        auto updated = frames[j].modulate(fit.envelopes);
        for (std::size_t i = 0; i < n; ++i) total[i] += updated[i] - cj[i];
        cj = std::move(updated);
        res.envelopes[j] = std::move(fit.envelopes);
        res.coefficients[j] = std::move(fit.coefficients);
      }
      if (with_outliers)
        for (std::size_t i = 0; i < n; ++i)
          if (z[i] != 0.0) z[i] = f.values[i] - total[i];
    }
    for (std::size_t i = 0; i < n; ++i) residual[i] = f.values[i] - total[i] - (with_outliers ? z[i] : 0.0);
    res.relative_residual = norm2(residual) / scale;
  }
  res.residual = residual;
  if (with_outliers) res.outliers = std::move(z);
  return res;
}

std::vector<ThetaFrame> build_frames(std::span<const PhaseFunction> phases, FrameOptions options) {
  std::vector<ThetaFrame> frames;
  frames.reserve(phases.size());
  for (const auto& p : phases) frames.emplace_back(p, options);
  return frames;
}

}  // namespace

AlmResult sweeping_alm(const SampledSignal& f, std::span<const ThetaFrame> frames, const AlmOptions& opts,
                       const AlmObserver* observer) {
  return run_alm(f, frames, opts, observer, false);
}

AlmResult sweeping_alm_outliers(const SampledSignal& f, std::span<const ThetaFrame> frames, const AlmOptions& opts,
                                const AlmObserver* observer) {
  return run_alm(f, frames, opts, observer, true);
}

AlmResult sweeping_alm(const SampledSignal& f, std::span<const PhaseFunction> phases, const AlmOptions& opts,
                       FrameOptions frame_options) {
  const auto frames = build_frames(phases, frame_options);
  return run_alm(f, frames, opts, nullptr, false);
}

AlmResult sweeping_alm_outliers(const SampledSignal& f, std::span<const PhaseFunction> phases,
                                const AlmOptions& opts, FrameOptions frame_options) {
  const auto frames = build_frames(phases, frame_options);
  return run_alm(f, frames, opts, nullptr, true);
}

}  // namespace sparsetf
