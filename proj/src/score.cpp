#include "sparsetf/score.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "sparsetf/numerics.hpp"

namespace sparsetf {

namespace {

double correlation(std::span<const double> a, std::span<const double> b) {
  const double na = norm2(a), nb = norm2(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

// Similarity also penalizes level differences, which plain correlation of two
// positive curves barely sees.
double similarity(std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double nb = norm2(b);
  return correlation(a, b) - (nb > 0.0 ? norm2(d) / nb : 0.0);
}

}  // namespace

std::vector<std::optional<std::size_t>> match_components(std::span<const std::vector<double>> est,
                                                         std::span<const std::vector<double>> truth) {
  const std::size_t m = est.size(), k = truth.size();
  for (const auto& e : est)
    for (const auto& t : truth)
      if (e.size() != t.size()) throw std::invalid_argument("component lengths differ");
  if (m > 8 || k > 8) throw std::invalid_argument("matching supports at most 8 components");

  std::vector<std::vector<double>> sim(m, std::vector<double>(k));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) sim[i][j] = similarity(est[i], truth[j]);

  // Slots 0..k-1 are true components, slots ≥ k mean unmatched.
  const std::size_t slots = std::max(m, k);
  std::vector<std::size_t> perm(slots);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_value = -1e300;
  do {
    double v = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (perm[i] < k) v += sim[i][perm[i]];
    if (v > best_value + 1e-12) {
      best_value = v;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<std::optional<std::size_t>> out(m);
  for (std::size_t i = 0; i < m; ++i)
    if (best[i] < k) out[i] = best[i];
  return out;
}

OutlierScore score_outliers(std::span<const double> z, std::span<const Outlier> truth, double threshold) {
  OutlierScore s;
  s.threshold = threshold;
  std::unordered_set<std::size_t> injected;
  for (const auto& o : truth) {
    if (o.index >= z.size()) throw std::invalid_argument("outlier index out of range");
    injected.insert(o.index);
    if (std::abs(o.strength) > threshold) {
      ++s.true_above;
      if (std::abs(z[o.index]) > threshold) ++s.recovered;
    }
  }
  std::size_t flagged = 0, flagged_true = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (std::abs(z[i]) <= threshold) continue;
    ++flagged;
    if (injected.count(i))
      ++flagged_true;
    else
      ++s.false_positives;
  }
  s.precision = flagged ? static_cast<double>(flagged_true) / static_cast<double>(flagged) : 1.0;
  s.recall = s.true_above ? static_cast<double>(s.recovered) / static_cast<double>(s.true_above) : 1.0;
  return s;
}

ScoreReport score(const Decomposition& d, const GroundTruth& truth, double fraction,
                  std::optional<double> outlier_threshold) {
  ScoreReport r;
  r.interior_fraction = fraction;
  if (truth.phases.empty()) throw std::invalid_argument("ground truth has no components");
  const std::size_t n = truth.phases.front().size();
  if (d.residual.size() != n) throw std::invalid_argument("decomposition and ground truth differ in length");

  std::vector<std::vector<double>> est_if, true_if;
  for (const auto& c : d.components) {
    if (c.phase.size() != n || c.imf.size() != n) throw std::invalid_argument("component length mismatch");
    est_if.push_back(c.phase.theta_prime());
  }
  for (const auto& p : truth.phases) true_if.push_back(p.theta_prime());
  r.permutation = match_components(est_if, true_if);

  const auto imfs = truth.imfs();
  for (std::size_t i = 0; i < d.components.size(); ++i) {
    if (!r.permutation[i]) continue;
    const std::size_t j = *r.permutation[i];
    r.components.push_back({i, j, interior_relative_error(est_if[i], true_if[j], fraction),
                            interior_relative_error(d.components[i].imf, imfs[j], fraction)});
  }

  if (truth.outliers) {
    const double th = outlier_threshold ? *outlier_threshold
                                        : (d.diagnostics.mu > 0.0 ? 2.0 / d.diagnostics.mu : 0.0);
    std::vector<double> zero(n, 0.0);
    r.outliers = score_outliers(d.outliers ? std::span<const double>(*d.outliers) : std::span<const double>(zero),
                                *truth.outliers, th);
  }
  r.residual_norm = norm2(d.residual);
  return r;
}

}  // namespace sparsetf
