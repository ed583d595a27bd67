#include <stdexcept>

#include <doctest.h>

#include "helpers.hpp"
#include "sparsetf/score.hpp"
#include "sparsetf/signals.hpp"

using namespace sparsetf;

namespace {

Decomposition from_truth(const GeneratedSignal& g) {
  Decomposition d;
  const auto imfs = g.truth.imfs();
  for (std::size_t j = 0; j < g.truth.phases.size(); ++j) {
    Component c;
    c.phase = g.truth.phases[j];
    c.a = g.truth.envelopes[j];
    c.b.assign(c.a.size(), 0.0);
    c.imf = imfs[j];
    d.components.push_back(std::move(c));
  }
  d.residual.assign(g.signal.size(), 0.0);
  d.diagnostics.mu = 4.0;
  return d;
}

}  // namespace

TEST_CASE("a decomposition scored against its own truth has zero error") {
  const auto g = gen_example1(512, 0.0, 1);
  const auto r = score(from_truth(g), g.truth);
  REQUIRE(r.components.size() == 2);
  for (const auto& c : r.components) {
    CHECK(c.estimate == c.truth);
    CHECK(c.if_error == 0.0);
    CHECK(c.imf_error == 0.0);
  }
  CHECK(r.residual_norm == 0.0);
  CHECK(r.interior_fraction == 0.8);
  CHECK_FALSE(r.outliers.has_value());
}

TEST_CASE("swapped components are paired by frequency correlation") {
  const auto g = gen_example1(512, 0.0, 1);
  auto d = from_truth(g);
  std::swap(d.components[0], d.components[1]);
  const auto r = score(d, g.truth);
  REQUIRE(r.permutation.size() == 2);
  CHECK(r.permutation[0] == 1u);
  CHECK(r.permutation[1] == 0u);
  for (const auto& c : r.components) CHECK(c.if_error == 0.0);
}

TEST_CASE("extra estimated components are left unmatched") {
  const std::vector<std::vector<double>> est{{1, 2, 3, 4}, {10, 11, 10, 11}, {5, 5, 6, 6}};
  const std::vector<std::vector<double>> truth{{10, 11, 10, 11}, {1, 2, 3, 4}};
  const auto p = match_components(est, truth);
  REQUIRE(p.size() == 3);
  CHECK(p[0] == 1u);
  CHECK(p[1] == 0u);
  CHECK_FALSE(p[2].has_value());
}

TEST_CASE("scores measure relative interior error") {
  const auto g = gen_example1(500, 0.0, 1);
  auto d = from_truth(g);
  for (double& v : d.components[0].imf) v *= 1.1;
  auto tp = d.components[1].phase.theta_prime();
  for (double& v : tp) v *= 0.98;
  d.components[1].phase = PhaseFunction(d.components[1].phase.theta(), tp, g.signal.dt);
  const auto r = score(d, g.truth);
  CHECK(r.components[0].imf_error == doctest::Approx(0.1));
  CHECK(r.components[1].if_error == doctest::Approx(0.02));
}

TEST_CASE("outlier scoring counts exact-index hits and false positives") {
  std::vector<double> z(20, 0.0);
  const std::vector<Outlier> truth{{2, 3.0}, {5, -2.0}, {9, 0.1}, {15, 1.5}};
  z[2] = 2.9;    // hit
  z[5] = -1.8;   // hit
  z[9] = 0.0;    // below threshold in the truth, not counted
  z[16] = 1.4;   // near miss: wrong index, counts as a false positive
  z[11] = 0.05;  // below threshold
  const auto s = score_outliers(z, truth, 1.0);
  CHECK(s.threshold == 1.0);
  CHECK(s.true_above == 3);
  CHECK(s.recovered == 2);
  CHECK(s.false_positives == 1);
  CHECK(s.recall == doctest::Approx(2.0 / 3.0));
  CHECK(s.precision == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(score_outliers(z, std::vector<Outlier>{{30, 1.0}}, 1.0), std::invalid_argument);
}

TEST_CASE("outlier threshold defaults to 2 over mu") {
  const auto g = gen_example2(256, 4, 1.0, 0.0, 3);
  auto d = from_truth(g);
  std::vector<double> z(256, 0.0);
  for (const auto& o : *g.truth.outliers) z[o.index] = o.strength;
  d.outliers = z;
  const auto r = score(d, g.truth);
  REQUIRE(r.outliers.has_value());
  CHECK(r.outliers->threshold == doctest::Approx(0.5));
  CHECK(r.outliers->recall == 1.0);
  CHECK(r.outliers->false_positives == 0);
  CHECK(score(d, g.truth, 0.8, 0.25).outliers->threshold == 0.25);
}

TEST_CASE("length mismatches are rejected") {
  const auto g = gen_example1(256, 0.0, 1);
  const auto other = gen_example1(128, 0.0, 1);
  CHECK_THROWS_AS(score(from_truth(other), g.truth), std::invalid_argument);
}
