#include "sparsetf/signals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sparsetf {

std::uint64_t GaussianRng::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double GaussianRng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianRng::gaussian() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double phi = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(phi);
  return r * std::cos(phi);
}

std::size_t GaussianRng::below(std::size_t n) {
  if (n == 0) throw std::invalid_argument("below(0)");
  return static_cast<std::size_t>(next_u64() % n);
}

std::vector<std::vector<double>> GroundTruth::imfs() const {
  std::vector<std::vector<double>> out;
  for (std::size_t j = 0; j < phases.size(); ++j) {
    const auto& th = phases[j].theta();
    std::vector<double> x(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) x[i] = envelopes[j][i] * std::cos(th[i]);
    out.push_back(std::move(x));
  }
  return out;
}

namespace {

GeneratedSignal two_tone(std::size_t n) {
  constexpr double pi = std::numbers::pi;
  const double dt = 1.0 / static_cast<double>(n);
  std::vector<double> th1(n), th2(n), tp1(n), tp2(n), f(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    th1[i] = 39.2 * pi * t - 12.0 * std::sin(2.0 * pi * t);
    th2[i] = 85.4 * pi * t + 12.0 * std::sin(2.0 * pi * t);
    tp1[i] = 39.2 * pi - 24.0 * pi * std::cos(2.0 * pi * t);
    tp2[i] = 85.4 * pi + 24.0 * pi * std::cos(2.0 * pi * t);
    f[i] = std::cos(th1[i]) + std::cos(th2[i]);
  }
  GeneratedSignal g;
  g.signal = {std::move(f), 0.0, dt};
  g.truth.phases.emplace_back(std::move(th1), std::move(tp1), dt);
  g.truth.phases.emplace_back(std::move(th2), std::move(tp2), dt);
  g.truth.envelopes.assign(2, std::vector<double>(n, 1.0));
  return g;
}

}  // namespace

GeneratedSignal gen_example1(std::size_t n, double sigma, std::uint64_t seed) {
  if (n < 64) throw std::invalid_argument("example 1 needs N ≥ 64, got " + std::to_string(n));
  if (!(sigma >= 0.0)) throw std::invalid_argument("noise level must be nonnegative");
  auto g = two_tone(n);
  g.truth.noise_sigma = sigma;
  if (sigma > 0.0) {
    GaussianRng rng(seed);
    for (auto& v : g.signal.values) v += sigma * rng.gaussian();
  }
  return g;
}

GeneratedSignal gen_example2(std::size_t n, std::size_t n_outliers, double outlier_sigma, double noise_sigma,
                             std::uint64_t seed) {
  if (n < 64) throw std::invalid_argument("example 2 needs N ≥ 64, got " + std::to_string(n));
  if (n_outliers >= n) throw std::invalid_argument("outlier count must be below N");
  if (!(outlier_sigma >= 0.0) || !(noise_sigma >= 0.0))
    throw std::invalid_argument("standard deviations must be nonnegative");
  auto g = two_tone(n);
  g.truth.noise_sigma = noise_sigma;
  GaussianRng rng(seed);

  // Partial Fisher-Yates for distinct indices.
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t k = 0; k < n_outliers; ++k) std::swap(idx[k], idx[k + rng.below(n - k)]);
  std::vector<Outlier> outliers;
  for (std::size_t k = 0; k < n_outliers; ++k) outliers.push_back({idx[k], outlier_sigma * rng.gaussian()});
  std::sort(outliers.begin(), outliers.end(), [](const Outlier& a, const Outlier& b) { return a.index < b.index; });
  for (const auto& o : outliers) g.signal.values[o.index] += o.strength;
  g.truth.outliers = std::move(outliers);

  if (noise_sigma > 0.0)
    for (auto& v : g.signal.values) v += noise_sigma * rng.gaussian();
  return g;
}

double StiffnessTerm::operator()(double t) const { return c * std::cos(omega * t) + d; }

void MdofParams::validate() const {
  if (samples < 16) throw std::invalid_argument("MDOF needs at least 16 samples");
  if (!(t_end > t_begin)) throw std::invalid_argument("MDOF time span is empty");
  if (substeps < 8) throw std::invalid_argument("MDOF needs at least 8 integration steps per sample");
}

namespace {

using State = std::array<double, 4>;  // u1, u2, v1, v2

bool positive_definite(const MdofParams& p, double t) {
  const double a = p.k1(t) + p.k2(t), c = p.k2(t) + p.k3(t), b = -p.k2(t);
  return a > 0.0 && a * c - b * b > 0.0;
}

State rhs(const MdofParams& p, double t, const State& y) {
  const double k1 = p.k1(t), k2 = p.k2(t), k3 = p.k3(t);
  return {y[2], y[3], -((k1 + k2) * y[0] - k2 * y[1]), -(-k2 * y[0] + (k2 + k3) * y[1])};
}

State axpy(const State& y, double h, const State& k) {
  return {y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
}

double low_if(const MdofParams& p, double t) { return std::sqrt((p.k1(t) + p.k3(t)) / 2.0); }
double high_if(const MdofParams& p, double t) { return std::sqrt((p.k1(t) + p.k3(t) + 4.0 * p.k2(t)) / 2.0); }

}  // namespace

MdofSignal gen_mdof(const MdofParams& p) {
  p.validate();
  const std::size_t n = p.samples;
  const double dt = (p.t_end - p.t_begin) / static_cast<double>(n);
  const double h = dt / p.substeps;

  MdofSignal out;
  out.signal.t0 = p.t_begin;
  out.signal.dt = dt;
  out.signal.values.resize(n);
  out.u2.resize(n);
  out.du1.resize(n);
  out.du2.resize(n);
  out.low_frequency.resize(n);
  out.high_frequency.resize(n);

  State y{p.u1, p.u2, p.v1, p.v2};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = p.t_begin + static_cast<double>(i) * dt;
    if (!positive_definite(p, t))
      throw std::invalid_argument("stiffness matrix is not positive definite at t = " + std::to_string(t));
    out.signal.values[i] = y[0];
    out.u2[i] = y[1];
    out.du1[i] = y[2];
    out.du2[i] = y[3];
    out.low_frequency[i] = low_if(p, t);
    out.high_frequency[i] = high_if(p, t);
    if (i + 1 == n) break;
    for (int s = 0; s < p.substeps; ++s) {
      const double ts = t + s * h;
      const State k1 = rhs(p, ts, y);
      const State k2 = rhs(p, ts + h / 2, axpy(y, h / 2, k1));
      const State k3 = rhs(p, ts + h / 2, axpy(y, h / 2, k2));
      const State k4 = rhs(p, ts + h, axpy(y, h, k3));
      for (int c = 0; c < 4; ++c) y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
  }
  return out;
}

std::vector<double> frequency_crossings(const MdofParams& p) {
  p.validate();
  auto gap = [&](double t) { return std::abs(high_if(p, t) - low_if(p, t)); };
  const std::size_t n = p.samples * static_cast<std::size_t>(p.substeps);
  const double h = (p.t_end - p.t_begin) / static_cast<double>(n);
  std::vector<double> g(n + 1);
  double scale = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = p.t_begin + static_cast<double>(i) * h;
    g[i] = gap(t);
    scale = std::max(scale, high_if(p, t));
  }

  std::vector<double> found;
  for (std::size_t i = 0; i <= n; ++i) {
    const bool left = i == 0 || g[i] < g[i - 1];
    const bool right = i == n || g[i] <= g[i + 1];
    if (!(left && right)) continue;
    double lo = p.t_begin + (static_cast<double>(i) - 1.0) * h, hi = lo + 2.0 * h;
    lo = std::max(lo, p.t_begin);
    hi = std::min(hi, p.t_end);
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(hi)); ++it) {
      const double a = hi - r * (hi - lo), b = lo + r * (hi - lo);
      if (gap(a) < gap(b))
        hi = b;
      else
        lo = a;
    }
    const double t = 0.5 * (lo + hi);
    // A tangential contact of smooth curves leaves a gap quadratic in the
    // location error, so the acceptance threshold can be tight.
    if (gap(t) <= 1e-9 * scale) found.push_back(t);
  }
  return found;
}

}  // namespace sparsetf
