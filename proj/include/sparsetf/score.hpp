#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sparsetf/decompose.hpp"
#include "sparsetf/signals.hpp"

namespace sparsetf {

// Assignment of estimated components to true ones maximizing the summed
// normalized correlation of instantaneous frequencies. Entry i is the truth
// index paired with estimate i, or nullopt when there are more estimates
// than true components.
std::vector<std::optional<std::size_t>> match_components(std::span<const std::vector<double>> estimated_if,
                                                         std::span<const std::vector<double>> true_if);

struct ComponentScore {
  std::size_t estimate = 0;
  std::size_t truth = 0;
  double if_error = 0.0;   // interior relative ℓ² of θ'
  double imf_error = 0.0;  // interior relative ℓ² of the IMF
};

struct OutlierScore {
  double threshold = 0.0;
  std::size_t true_above = 0;       // injected outliers with |strength| > threshold
  std::size_t recovered = 0;        // of those, flagged at the exact index
  std::size_t false_positives = 0;  // flagged entries above threshold at non-outlier samples
  double precision = 1.0;
  double recall = 1.0;
};

struct ScoreReport {
  std::vector<ComponentScore> components;
  std::vector<std::optional<std::size_t>> permutation;
  std::optional<OutlierScore> outliers;
  double residual_norm = 0.0;
  double interior_fraction = 0.8;
};

// An estimated entry counts as flagged when |z_i| > threshold. Throws
// std::invalid_argument on length mismatches.
OutlierScore score_outliers(std::span<const double> z, std::span<const Outlier> truth, double threshold);

// Throws std::invalid_argument if lengths disagree. The outlier threshold
// defaults to 2/μ from the decomposition diagnostics.
ScoreReport score(const Decomposition& d, const GroundTruth& truth, double interior_fraction = 0.8,
                  std::optional<double> outlier_threshold = std::nullopt);

}  // namespace sparsetf
