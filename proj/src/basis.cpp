#include "sparsetf/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sparsetf/errors.hpp"
#include "sparsetf/numerics.hpp"

namespace sparsetf {

std::vector<double> SampledSignal::times() const {
  std::vector<double> t(values.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = time(i);
  return t;
}

void SampledSignal::validate() const {
  if (values.size() < 16) throw std::invalid_argument("signal needs at least 16 samples");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("sample spacing must be positive");
  if (!std::isfinite(t0)) throw std::invalid_argument("start time must be finite");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("signal contains non-finite values");
}

PhaseFunction::PhaseFunction(std::vector<double> theta, std::vector<double> theta_prime, double dt)
    : theta_(std::move(theta)), theta_prime_(std::move(theta_prime)), dt_(dt) {
  if (theta_.size() != theta_prime_.size()) throw InvalidPhase("θ and θ' have different lengths");
  if (theta_.size() < 5) throw InvalidPhase("phase needs at least 5 samples");
  if (!(dt_ > 0.0)) throw InvalidPhase("phase sample spacing must be positive");
  for (std::size_t i = 0; i < theta_.size(); ++i) {
    if (!std::isfinite(theta_[i]) || !std::isfinite(theta_prime_[i])) throw InvalidPhase("phase is not finite");
    if (!(theta_prime_[i] > 0.0))
      throw InvalidPhase("instantaneous frequency is not positive at sample " + std::to_string(i));
    if (i > 0 && !(theta_[i] > theta_[i - 1]))
      throw InvalidPhase("phase is not strictly increasing at sample " + std::to_string(i));
  }
}

PhaseFunction PhaseFunction::from_theta(std::vector<double> theta, double dt) {
  auto tp = differentiate(theta, dt);
  return PhaseFunction(std::move(theta), std::move(tp), dt);
}

PhaseFunction PhaseFunction::linear(std::size_t n, double dt, double omega, double offset) {
  std::vector<double> theta(n), tp(n, omega);
  for (std::size_t i = 0; i < n; ++i) theta[i] = offset + omega * dt * static_cast<double>(i);
  return PhaseFunction(std::move(theta), std::move(tp), dt);
}

bool PhaseFunction::is_consistent(double tolerance) const {
  for (std::size_t i = 1; i + 1 < theta_.size(); ++i) {
    const double fd = (theta_[i + 1] - theta_[i - 1]) / (2.0 * dt_);
    if (std::abs(fd - theta_prime_[i]) > tolerance * std::abs(theta_prime_[i])) return false;
  }
  return true;
}

std::vector<double> ThetaGrid::nodes() const {
  std::vector<double> out(size);
  for (std::size_t k = 0; k < size; ++k) out[k] = node(k);
  return out;
}

double ThetaGrid::num_periods() const { return span / (2.0 * std::numbers::pi); }

ThetaGrid make_theta_grid(const PhaseFunction& phase, std::size_t n_theta) {
  if (!is_power_of_two(n_theta)) throw std::invalid_argument("θ-grid size must be a power of two");
  if (n_theta < 4) throw std::invalid_argument("θ-grid needs at least 4 nodes");
  ThetaGrid g;
  g.theta_min = phase.theta().front();
  g.span = phase.end_value() - g.theta_min;
  g.size = n_theta;
  return g;
}

std::vector<double> to_theta(std::span<const double> x, const PhaseFunction& phase, const ThetaGrid& grid) {
  if (x.size() != phase.size()) throw std::invalid_argument("to_theta: length mismatch");
  const auto nodes = grid.nodes();
  SplineResampler r(phase.theta(), nodes, SplineBoundary::kNotAKnotMirror);
  return r.apply(x);
}

std::vector<double> from_theta(std::span<const double> y, const PhaseFunction& phase, const ThetaGrid& grid) {
  if (y.size() != grid.size) throw std::invalid_argument("from_theta: length mismatch");
  SplineResampler r(grid.nodes(), phase.theta(), SplineBoundary::kPeriodic, grid.span);
  return r.apply(y);
}

double weighted_inner(std::span<const double> g, std::span<const double> h, const PhaseFunction& phase) {
  if (g.size() != h.size() || g.size() != phase.size())
    throw std::invalid_argument("weighted_inner: length mismatch");
  const auto& tp = phase.theta_prime();
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * h[i] * tp[i];
  return s * phase.dt();
}

int default_l0(const ThetaGrid& grid) {
  const int max_l0 = std::max(1, log2_exact(grid.size) - 3);
  const double periods = grid.num_periods();
  const int l0 = periods >= 2.0 ? static_cast<int>(std::floor(std::log2(periods))) : 1;
  return std::clamp(l0, 1, max_l0);
}

ThetaFrame::ThetaFrame(PhaseFunction phase, FrameOptions options) : phase_(std::move(phase)) {
  const std::size_t n = phase_.size();
  const std::size_t n_theta = options.n_theta == 0 ? next_power_of_two(n) : options.n_theta;
  grid_ = make_theta_grid(phase_, n_theta);
  const int total = log2_exact(n_theta);
  const double periods = grid_.num_periods();
  const double size = static_cast<double>(n_theta);

  // Envelope band edge (2/3)·N_θ/2^J bins must not exceed the carrier at L_θ bins.
  const double ratio = 2.0 * size / (3.0 * periods);
  fine_levels_ = ratio <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log2(ratio) - 1e-12));
  if (fine_levels_ > total - 2)
    throw InvalidPhase("phase covers too few periods (" + std::to_string(periods) + ") for a " +
                       std::to_string(n_theta) + "-node θ-grid");
  const double band_edge = 2.0 * size / (3.0 * std::ldexp(1.0, fine_levels_));
  if (periods + band_edge > 0.5 * size)
    throw InvalidPhase("phase oscillates too fast for the θ-grid (" + std::to_string(periods) + " periods on " +
                       std::to_string(n_theta) + " nodes)");

  const int max_l0 = total - 1 - fine_levels_;
  if (options.l0 > 0) {
    if (options.l0 > max_l0)
      throw std::invalid_argument("l0=" + std::to_string(options.l0) + " exceeds the maximum " +
                                  std::to_string(max_l0) + " for this θ-grid");
    l0_ = options.l0;
  } else {
    l0_ = std::clamp(default_l0(grid_), 1, max_l0);
  }
  system_ = std::make_shared<const MeyerSystem>(MeyerSystem::build(n_theta, fine_levels_ + l0_));

  const auto nodes = grid_.nodes();
  time_to_grid_ = std::make_shared<const SplineResampler>(phase_.theta(), nodes, SplineBoundary::kNotAKnotMirror);
  grid_to_time_ =
      std::make_shared<const SplineResampler>(nodes, phase_.theta(), SplineBoundary::kPeriodic, grid_.span);

  time_cos_.resize(n);
  time_sin_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    time_cos_[i] = std::cos(phase_.theta()[i]);
    time_sin_[i] = std::sin(phase_.theta()[i]);
  }
}

std::size_t ThetaFrame::envelope_size() const { return grid_.size >> fine_levels_; }

std::vector<double> ThetaFrame::to_theta(std::span<const double> x) const {
  if (x.size() != time_size()) throw std::invalid_argument("to_theta: length mismatch");
  return time_to_grid_->apply(x);
}

std::vector<double> ThetaFrame::from_theta(std::span<const double> y) const {
  if (y.size() != grid_.size) throw std::invalid_argument("from_theta: length mismatch");
  return grid_to_time_->apply(y);
}

double ThetaFrame::weighted_inner(std::span<const double> g, std::span<const double> h) const {
  return sparsetf::weighted_inner(g, h, phase_);
}

WaveletCoefficients ThetaFrame::analyze_grid(std::span<const double> y) const {
  auto c = system_->forward(y);
  const double s = std::sqrt(grid_.spacing());
  for (auto& v : c.coarse) v *= s;
  for (auto& d : c.detail)
    for (auto& v : d) v *= s;
  return c;
}

std::vector<double> ThetaFrame::synthesize_grid(const WaveletCoefficients& c) const {
  auto y = system_->inverse(c);
  const double s = 1.0 / std::sqrt(grid_.spacing());
  for (auto& v : y) v *= s;
  return y;
}

void ThetaFrame::restrict_to(WaveletCoefficients& c, int eta) const {
  if (eta < 0 || eta > l0_)
    throw std::invalid_argument("η=" + std::to_string(eta) + " outside [0, " + std::to_string(l0_) + "]");
  for (int l = 1; l <= fine_levels_ + eta; ++l) std::fill(c.level(l).begin(), c.level(l).end(), 0.0);
}

std::pair<WaveletCoefficients, WaveletCoefficients> ThetaFrame::dictionary_coefficients(
    std::span<const double> w) const {
  if (w.size() != time_size()) throw std::invalid_argument("dictionary_coefficients: length mismatch");
  // Exact adjoint of the synthesis in envelopes(): weighted inner products of
  // w with the columns √2·carrier·S·ψ, where S is the θ-grid → time spline.
  const auto& tp = phase_.theta_prime();
  std::vector<double> uc(w.size()), us(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double wi = w[i] * tp[i] * phase_.dt();
    uc[i] = time_cos_[i] * wi;
    us[i] = time_sin_[i] * wi;
  }
  auto gc = grid_to_time_->apply_transpose(uc);
  auto gs = grid_to_time_->apply_transpose(us);
  // √2 from the carrier and 1/√Δθ from the L²(dθ) normalization.
  const double s = std::numbers::sqrt2 / std::sqrt(grid_.spacing());
  for (std::size_t k = 0; k < gc.size(); ++k) {
    gc[k] *= s;
    gs[k] *= s;
  }
  std::pair<WaveletCoefficients, WaveletCoefficients> out;
  system_->forward_pair(gc, gs, fine_levels_, out.first, out.second);
  return out;
}

EnvelopePair ThetaFrame::envelopes(const WaveletCoefficients& ca, const WaveletCoefficients& cb) const {
  std::vector<double> ya, yb;
  system_->inverse_pair(ca, cb, fine_levels_, ya, yb);
  const double s = std::numbers::sqrt2 / std::sqrt(grid_.spacing());
  for (auto& v : ya) v *= s;
  for (auto& v : yb) v *= s;
  return {from_theta(ya), from_theta(yb)};
}

std::vector<double> ThetaFrame::envelope_on_grid(const WaveletCoefficients& c) const {
  auto y = synthesize_grid(c);
  for (auto& v : y) v *= std::numbers::sqrt2;
  return y;
}

std::vector<double> ThetaFrame::modulate(const EnvelopePair& env) const {
  if (env.a.size() != time_size() || env.b.size() != time_size())
    throw std::invalid_argument("modulate: envelope length mismatch");
  std::vector<double> out(time_size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = env.a[i] * time_cos_[i] + env.b[i] * time_sin_[i];
  return out;
}

std::vector<double> ThetaFrame::project_grid(std::span<const double> y, int eta) const {
  auto c = analyze_grid(y);
  restrict_to(c, eta);
  return synthesize_grid(c);
}

std::vector<double> ThetaFrame::project(std::span<const double> x, int eta) const {
  return from_theta(project_grid(to_theta(x), eta));
}

std::vector<double> ThetaFrame::pack_envelope(const WaveletCoefficients& c) const {
  std::vector<double> out;
  out.reserve(envelope_size());
  out.insert(out.end(), c.coarse.begin(), c.coarse.end());
  for (int l = c.levels(); l > fine_levels_; --l) out.insert(out.end(), c.level(l).begin(), c.level(l).end());
  return out;
}

WaveletCoefficients ThetaFrame::unpack_envelope(std::span<const double> flat) const {
  if (flat.size() != envelope_size()) throw std::invalid_argument("unpack_envelope: wrong length");
  auto c = WaveletCoefficients::zeros(grid_.size, system_->levels());
  auto it = flat.begin();
  std::copy_n(it, c.coarse.size(), c.coarse.begin());
  it += static_cast<std::ptrdiff_t>(c.coarse.size());
  for (int l = c.levels(); l > fine_levels_; --l) {
    auto& d = c.level(l);
    std::copy_n(it, d.size(), d.begin());
    it += static_cast<std::ptrdiff_t>(d.size());
  }
  return c;
}

std::vector<double> ThetaFrame::dictionary_column(std::size_t index, bool sine) const {
  if (index >= envelope_size()) throw std::invalid_argument("dictionary column index out of range");
  std::vector<double> unit(envelope_size(), 0.0);
  unit[index] = 1.0;
  const auto env = from_theta(envelope_on_grid(unpack_envelope(unit)));
  const auto& carrier = sine ? time_sin_ : time_cos_;
  std::vector<double> col(env.size());
  for (std::size_t i = 0; i < col.size(); ++i) col[i] = env[i] * carrier[i];
  return col;
}

std::vector<double> project_coarse(std::span<const double> x, const ThetaFrame& frame, int eta) {
  return frame.project(x, eta);
}

}  // namespace sparsetf
