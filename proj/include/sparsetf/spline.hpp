#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sparsetf {

enum class SplineBoundary {
  // Not-a-knot ends; queries outside the knot range are answered by the even
  // (mirror) extension of the data about the nearest end knot.
  kNotAKnotMirror,
  // Knots are one period of a periodic function with the given period.
  kPeriodic,
};

// Cubic-spline resampling between a fixed set of knots and a fixed set of
// query points. The knot-dependent factorization and the query-to-interval
// lookup are computed once, so apply() is O(knots + queries) per data vector.
class SplineResampler {
 public:
  // knots must be strictly increasing with at least 4 entries. For
  // kPeriodic, period must exceed knots.back() - knots.front().
  SplineResampler(std::vector<double> knots, std::span<const double> queries, SplineBoundary boundary,
                  double period = 0.0);

  std::size_t knot_count() const { return knots_.size(); }
  std::size_t query_count() const { return index_.size(); }

  std::vector<double> apply(std::span<const double> values) const;

  // Transpose of apply(): maps a vector over the queries back onto the knots,
  // so that dot(apply(y), g) == dot(y, apply_transpose(g)). kPeriodic only.
  std::vector<double> apply_transpose(std::span<const double> g) const;

  // Second derivatives of the interpolant at the knots.
  std::vector<double> second_derivatives(std::span<const double> values) const;

 private:
  std::vector<double> knots_;
  SplineBoundary boundary_;
  double period_ = 0.0;

  // Interval widths (n-1 for not-a-knot, n for periodic, the last one wrapping).
  std::vector<double> widths_;

  // Thomas factorization of the reduced tridiagonal system.
  std::vector<double> lower_, diag_, upper_;
  std::vector<double> cprime_, denom_;
  // Sherman-Morrison correction for the cyclic system.
  std::vector<double> cyclic_z_;
  double cyclic_gamma_ = 0.0;
  double cyclic_factor_ = 0.0;

  // Per-query interval index and position inside it.
  std::vector<std::size_t> index_;
  std::vector<double> offset_;

  std::vector<double> solve_tridiagonal(std::vector<double> rhs) const;
  // Solves the cyclic system with the Sherman-Morrison correction.
  std::vector<double> solve_periodic(std::vector<double> rhs) const;
};

// One-shot helper: evaluates the interpolant of (knots, values) at queries.
std::vector<double> spline_interpolate(std::span<const double> knots, std::span<const double> values,
                                       std::span<const double> queries, SplineBoundary boundary,
                                       double period = 0.0);

}  // namespace sparsetf
