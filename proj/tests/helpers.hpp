#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "sparsetf/alm.hpp"
#include "sparsetf/basis.hpp"

namespace testutil {

inline constexpr double kPi = std::numbers::pi;

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline std::vector<double> times(std::size_t n, double dt, double t0 = 0.0) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = t0 + static_cast<double>(i) * dt;
  return t;
}

// Phase θ(t) = 2π(k·t + c·sin 2πt) on t_i = i/n.
inline sparsetf::PhaseFunction wobbly_phase(std::size_t n, double k, double c) {
  const double dt = 1.0 / static_cast<double>(n);
  std::vector<double> th(n), tp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    th[i] = 2 * kPi * (k * t + c * std::sin(2 * kPi * t));
    tp[i] = 2 * kPi * (k + 2 * kPi * c * std::cos(2 * kPi * t));
  }
  return sparsetf::PhaseFunction(std::move(th), std::move(tp), dt);
}

// Columns of the explicit dictionary: all cos θ columns, then all sin θ columns.
inline std::vector<std::vector<double>> assemble_dictionary(const sparsetf::ThetaFrame& frame) {
  std::vector<std::vector<double>> cols;
  for (int s = 0; s < 2; ++s)
    for (std::size_t k = 0; k < frame.envelope_size(); ++k) cols.push_back(frame.dictionary_column(k, s == 1));
  return cols;
}

// argmin_p ‖p‖₁ + (μ/2)‖w − Θp‖²_{2,θ} by cyclic coordinate descent on the
// explicit columns, with the weighted inner product.
inline std::vector<double> lasso_coordinate_descent(const std::vector<std::vector<double>>& cols,
                                                    std::span<const double> w, const sparsetf::ThetaFrame& frame,
                                                    double mu, double tol = 1e-13, int max_sweeps = 200000) {
  const std::size_t k = cols.size();
  const std::size_t n = w.size();
  std::vector<double> p(k, 0.0), r(w.begin(), w.end()), norms(k);
  for (std::size_t j = 0; j < k; ++j) norms[j] = frame.weighted_inner(cols[j], cols[j]);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double rho = frame.weighted_inner(cols[j], r) + norms[j] * p[j];
      const double next = sparsetf::shrink(rho, 1.0 / mu) / norms[j];
      const double delta = next - p[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) r[i] -= delta * cols[j][i];
        p[j] = next;
        change = std::max(change, std::abs(delta));
      }
    }
    if (change < tol) break;
  }
  return p;
}

}  // namespace testutil
