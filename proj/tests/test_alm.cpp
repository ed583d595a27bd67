#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "helpers.hpp"
#include "sparsetf/alm.hpp"
#include "sparsetf/numerics.hpp"
#include "sparsetf/signals.hpp"

using namespace sparsetf;
using testutil::kPi;

TEST_CASE("shrink examples") {
  CHECK(shrink(std::vector<double>{1.2}, 0.5)[0] == doctest::Approx(0.7));
  CHECK(shrink(std::vector<double>{-0.3}, 0.5)[0] == 0.0);
  CHECK(shrink(-2.0, 0.5) == -1.5);
  const std::vector<double> x{0.1, -3.0, 2.5};
  CHECK(shrink(x, 0.0) == x);
  CHECK_THROWS_AS(shrink(1.0, -0.1), std::invalid_argument);
}

TEST_CASE("shrink minimizes |p| + (p - c)^2 / (2 tau)") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> cd(-3.0, 3.0), td(0.0, 1.5);
  for (int trial = 0; trial < 1000; ++trial) {
    const double c = cd(rng), tau = td(rng);
    auto objective = [&](double p) { return std::abs(p) + (p - c) * (p - c) / (2.0 * tau); };
    double best_p = 0.0, best = objective(0.0);
    for (double p = -4.0; p <= 4.0; p += 1e-4) {
      const double v = objective(p);
      if (v < best) {
        best = v;
        best_p = p;
      }
    }
    CHECK(std::abs(shrink(c, tau) - best_p) <= 2e-4);
  }
}

TEST_CASE("shrinking coefficient blocks in place") {
  auto c = WaveletCoefficients::zeros(16, 2);
  c.coarse = {1.0, -0.2, 0.5, -2.0};
  c.level(1)[3] = 0.4;
  shrink_in_place(c, 0.5);
  CHECK(c.coarse == std::vector<double>{0.5, 0.0, 0.0, -1.5});
  CHECK(c.level(1)[3] == 0.0);
}

TEST_CASE("proximal step of zero is zero") {
  const ThetaFrame frame(testutil::wobbly_phase(256, 8.0, 0.5));
  const std::vector<double> w(256, 0.0);
  const auto p = proximal_component(w, frame, 10.0);
  CHECK(p.coefficients.a.squared_norm() == 0.0);
  CHECK(p.coefficients.b.squared_norm() == 0.0);
  CHECK(max_abs(p.envelopes.a) == 0.0);
  CHECK(max_abs(p.envelopes.b) == 0.0);
  CHECK_THROWS_AS(proximal_component(w, frame, 0.0), std::invalid_argument);
}

TEST_CASE("proximal step with negligible shrinkage recovers a constant envelope") {
  const auto phase = PhaseFunction::linear(1024, 1.0 / 1024, 2 * kPi * 32);
  const ThetaFrame frame(phase);
  std::vector<double> w(1024);
  for (std::size_t i = 0; i < 1024; ++i) w[i] = std::cos(phase.theta()[i]);
  const auto p = proximal_component(w, frame, 1e6);
  for (std::size_t i = 0; i < 1024; ++i) {
    CHECK(p.envelopes.a[i] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(std::abs(p.envelopes.b[i]) < 1e-2);
  }
}

TEST_CASE("proximal step with negligible shrinkage equals least squares on the explicit dictionary") {
  const auto phase = testutil::wobbly_phase(256, 8.0, 0.5);
  const ThetaFrame frame(phase);
  const auto cols = testutil::assemble_dictionary(frame);
  std::mt19937_64 rng(21);
  std::vector<double> w(256, 0.0);
  for (const auto& c : cols) {
    const double coef = std::normal_distribution<double>(0.0, 1.0)(rng);
    for (std::size_t i = 0; i < 256; ++i) w[i] += coef * c[i];
  }
  // Least squares by coordinate descent without shrinkage (μ → ∞).
  const auto ls = testutil::lasso_coordinate_descent(cols, w, frame, 1e15, 1e-14);
  const auto p = proximal_component(w, frame, 1e15);
  const auto fa = frame.pack_envelope(p.coefficients.a), fb = frame.pack_envelope(p.coefficients.b);
  const std::size_t k = frame.envelope_size();
  double err = 0.0;
  for (std::size_t i = 0; i < k; ++i) err = std::max({err, std::abs(fa[i] - ls[i]), std::abs(fb[i] - ls[k + i])});
  CHECK(err < 1e-2);
}

TEST_CASE("proximal step matches the coordinate-descent oracle at N = 64") {
  const auto phase = testutil::wobbly_phase(64, 8.0, 0.25);
  const ThetaFrame frame(phase);
  const auto cols = testutil::assemble_dictionary(frame);
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 3; ++trial) {
    const auto w = testutil::random_vector(64, rng);
    const auto oracle = testutil::lasso_coordinate_descent(cols, w, frame, 10.0);
    const auto p = proximal_component(w, frame, 10.0);
    const auto fa = frame.pack_envelope(p.coefficients.a), fb = frame.pack_envelope(p.coefficients.b);
    const std::size_t k = frame.envelope_size();
    double err = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      err = std::max({err, std::abs(fa[i] - oracle[i]), std::abs(fb[i] - oracle[k + i])});
    CHECK(err <= 1e-4);
  }
}

TEST_CASE("refit on a fixed support removes the shrinkage bias") {
  const auto phase = testutil::wobbly_phase(256, 8.0, 0.5);
  const ThetaFrame frame(phase);
  const std::size_t k = frame.envelope_size();
  REQUIRE(k >= 2);
  std::vector<double> flat_a(k, 0.0), flat_b(k, 0.0);
  flat_a[1] = 2.0;
  flat_b[k - 1] = -1.0;
  const auto w = frame.modulate(frame.envelopes(frame.unpack_envelope(flat_a), frame.unpack_envelope(flat_b)));
  const auto shrunk = proximal_component(w, frame, 2.0);
  CHECK(frame.pack_envelope(shrunk.coefficients.a)[1] == doctest::Approx(1.5).epsilon(1e-2));
  const auto fit = refit_component(w, frame, shrunk.coefficients);
  const auto fa = frame.pack_envelope(fit.coefficients.a), fb = frame.pack_envelope(fit.coefficients.b);
  CHECK(fa[1] == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(fb[k - 1] == doctest::Approx(-1.0).epsilon(1e-2));
  CHECK(fa[0] == 0.0);
}

TEST_CASE("single component with the exact phase is recovered") {
  const auto phase = testutil::wobbly_phase(1024, 32.0, 0.5);
  SampledSignal f{std::vector<double>(1024), 0.0, phase.dt()};
  for (std::size_t i = 0; i < 1024; ++i) f.values[i] = std::cos(phase.theta()[i]);
  const std::vector<PhaseFunction> phases{phase};
  const auto r = sweeping_alm(f, phases, AlmOptions{});
  const auto range = interior_range(1024);
  for (std::size_t i = range.begin; i < range.end; ++i) {
    CHECK(r.envelopes[0].a[i] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(std::abs(r.envelopes[0].b[i]) < 1e-2);
  }
  CHECK(r.relative_residual <= 1e-2);
}

TEST_CASE("zero signal is a fixed point") {
  const std::vector<PhaseFunction> phases{PhaseFunction::linear(256, 1.0 / 256, 2 * kPi * 16)};
  const SampledSignal f{std::vector<double>(256, 0.0), 0.0, 1.0 / 256};
  const auto r = sweeping_alm(f, phases, AlmOptions{});
  CHECK(max_abs(r.envelopes[0].a) == 0.0);
  CHECK(max_abs(r.envelopes[0].b) == 0.0);
  CHECK(max_abs(r.multiplier) == 0.0);
  const auto z = sweeping_alm_outliers(f, phases, AlmOptions{});
  REQUIRE(z.outliers);
  CHECK(max_abs(*z.outliers) == 0.0);
}

TEST_CASE("two components with exact phases match the ground truth") {
  const auto g = gen_example1(1024, 0.0, 1);
  const auto r = sweeping_alm(g.signal, g.truth.phases, AlmOptions{});
  const auto imfs = g.truth.imfs();
  for (std::size_t j = 0; j < 2; ++j) {
    std::vector<double> est(1024);
    for (std::size_t i = 0; i < 1024; ++i) est[i] = r.envelopes[j].a[i] * std::cos(g.truth.phases[j].theta()[i]);
    CHECK(interior_relative_error(est, imfs[j]) < 0.05);
  }
}

TEST_CASE("an isolated impulse goes to the outlier vector") {
  const std::size_t n = 1024;
  SampledSignal f{std::vector<double>(n, 0.0), 0.0, 1.0 / n};
  f.values[300] = 5.0;
  const std::vector<PhaseFunction> phases{PhaseFunction::linear(n, f.dt, 2 * kPi * 32)};
  AlmOptions o;
  o.mu = 4.0;
  const auto r = sweeping_alm_outliers(f, phases, o);
  REQUIRE(r.outliers);
  CHECK(std::abs((*r.outliers)[300] - 5.0) <= 1.0 / o.mu);
  CHECK(max_abs(r.envelopes[0].a) < 0.1);
  CHECK(max_abs(r.envelopes[0].b) < 0.1);
}

TEST_CASE("outliers of Example 2 are found with the exact phases") {
  const auto g = gen_example2(1024, 32, 1.0, 0.0, 3);
  const auto r = sweeping_alm_outliers(g.signal, g.truth.phases, AlmOptions{});
  REQUIRE(r.outliers);
  const double threshold = 2.0 / r.mu;
  for (const auto& o : *g.truth.outliers) {
    if (std::abs(o.strength) <= threshold) continue;
    const double z = (*r.outliers)[o.index];
    CHECK(std::abs(z) > threshold);
    CHECK(std::signbit(z) == std::signbit(o.strength));
  }
}

TEST_CASE("multiplier update is q + mu * residual") {
  const auto g = gen_example1(256, 0.0, 1);
  std::vector<ThetaFrame> frames;
  for (const auto& p : g.truth.phases) frames.emplace_back(p);
  AlmOptions o;
  o.max_iters = 15;
  int calls = 0;
  double worst = 0.0;
  AlmObserver obs;
  double mu = 0.0;
  obs.on_multiplier = [&](const AlmObserver::Multiplier& m) {
    ++calls;
    for (std::size_t i = 0; i < m.before.size(); ++i)
      worst = std::max(worst, std::abs(m.after[i] - m.before[i] - mu * m.constraint_residual[i]));
  };
  mu = default_mu(g.signal.values, frames);
  const auto r = sweeping_alm(g.signal, frames, o, &obs);
  CHECK(r.mu == mu);
  CHECK(calls == r.iterations);
  CHECK(worst <= 1e-12);
}

TEST_CASE("each sweep uses fresh components before j and old ones after") {
  const std::size_t n = 512;
  const double dt = 1.0 / n;
  std::vector<PhaseFunction> phases;
  SampledSignal f{std::vector<double>(n, 0.0), 0.0, dt};
  for (double k : {12.0, 40.0, 90.0}) {
    phases.push_back(PhaseFunction::linear(n, dt, 2 * kPi * k));
    for (std::size_t i = 0; i < n; ++i) f.values[i] += std::cos(phases.back().theta()[i]) * (1.0 + 0.2 * k / 90.0);
  }
  std::vector<ThetaFrame> frames(phases.begin(), phases.end());
  AlmOptions o;
  o.max_iters = 4;
  o.patience = 0;
  // snapshots[iteration][j] = component state seen when component j is updated
  std::vector<std::vector<std::vector<std::vector<double>>>> snapshots(5);
  double residual_err = 0.0;
  AlmObserver obs;
  obs.on_sweep = [&](const AlmObserver::Sweep& s) {
    snapshots[s.iteration].emplace_back(s.components.begin(), s.components.end());
    for (std::size_t i = 0; i < n; ++i) {
      double others = 0.0;
      for (std::size_t l = 0; l < s.components.size(); ++l)
        if (l != s.component) others += s.components[l][i];
      residual_err = std::max(residual_err, std::abs(s.residual[i] - (f.values[i] - others)));
    }
  };
  const auto r = sweeping_alm(f, frames, o, &obs);
  CHECK(residual_err <= 1e-12);
  for (int it = 2; it <= r.iterations; ++it) {
    const auto& s = snapshots[it];
    REQUIRE(s.size() == 3);
    // Component 0 is updated between the calls for j = 0 and j = 1; later ones are untouched until their turn.
    CHECK(s[1][0] != s[0][0]);
    CHECK(s[1][1] == s[0][1]);
    CHECK(s[1][2] == s[0][2]);
    CHECK(s[2][0] == s[1][0]);
    CHECK(s[2][1] != s[1][1]);
    CHECK(s[2][2] == s[0][2]);
    // Component 2 at the start of this sweep is what the previous sweep left.
    CHECK(s[0][2] != snapshots[it - 1][0][2]);
  }
}

TEST_CASE("converged runs satisfy the constraint to the tolerance") {
  const auto g = gen_example1(512, 0.0, 1);
  AlmOptions o;
  o.tol = 1e-3;
  const auto r = sweeping_alm(g.signal, g.truth.phases, o);
  if (r.converged()) CHECK(r.relative_residual <= o.tol);
  double resid = 0.0;
  for (std::size_t i = 0; i < 512; ++i) {
    const double e = g.signal.values[i] - r.components[0][i] - r.components[1][i] - r.residual[i];
    resid = std::max(resid, std::abs(e));
  }
  CHECK(resid <= 1e-12);
}

TEST_CASE("noise estimate from the finest wavelet level") {
  std::mt19937_64 rng(7);
  const auto x = testutil::random_vector(4096, rng, 0.5);
  CHECK(estimate_noise_sigma(x) == doctest::Approx(0.5).epsilon(0.05));
  const auto g = gen_example1(1024, 0.0, 1);
  CHECK(estimate_noise_sigma(g.signal.values) < 1e-3);
  CHECK_THROWS_AS(estimate_noise_sigma(std::vector<double>(8, 1.0)), std::invalid_argument);
}

TEST_CASE("default mu on clean and noisy data") {
  const auto g = gen_example1(1024, 0.0, 1);
  std::vector<ThetaFrame> frames;
  for (const auto& p : g.truth.phases) frames.emplace_back(p);
  const double rms = norm2(g.signal.values) / std::sqrt(1024.0);
  CHECK(default_mu(g.signal.values, frames, 0.0) == doctest::Approx(10.0 / rms));
  const double sigma = 0.5;
  double fastest = 0.0;
  for (const auto& p : g.truth.phases)
    for (double v : p.theta_prime()) fastest = std::max(fastest, v * p.dt());
  CHECK(default_mu(g.signal.values, frames, sigma) == doctest::Approx(1.0 / (3.0 * sigma * std::sqrt(fastest))));
}

TEST_CASE("option validation") {
  const auto g = gen_example1(256, 0.0, 1);
  AlmOptions o;
  o.max_iters = 0;
  CHECK_THROWS_AS(sweeping_alm(g.signal, g.truth.phases, o), std::invalid_argument);
  o = {};
  o.sweeps = 0;
  CHECK_THROWS_AS(sweeping_alm(g.signal, g.truth.phases, o), std::invalid_argument);
  o = {};
  o.divergence = 1.0;
  CHECK_THROWS_AS(sweeping_alm(g.signal, g.truth.phases, o), std::invalid_argument);
  const std::vector<PhaseFunction> wrong{PhaseFunction::linear(128, 1.0 / 128, 2 * kPi * 8)};
  CHECK_THROWS(sweeping_alm(g.signal, wrong, AlmOptions{}));
  CHECK(std::string(to_string(AlmStatus::kDiverged)) == "diverged");
}
