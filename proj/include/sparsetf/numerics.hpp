#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sparsetf {

// d/dt on a uniform grid: 4th-order central differences in the interior,
// 2nd-order central one step in from each end, 2nd-order one-sided at the ends.
std::vector<double> differentiate(std::span<const double> x, double dt);

// Cumulative trapezoidal integral starting at 0 on the first sample.
std::vector<double> cumulative_trapezoid(std::span<const double> x, double dt);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> x);
double max_abs(std::span<const double> x);
double median(std::vector<double> values);

// Relative ℓ² error ‖estimate − truth‖ / ‖truth‖ over the central `fraction`
// of the samples (fraction = 0.8 drops 10% at each end).
double interior_relative_error(std::span<const double> estimate, std::span<const double> truth,
                               double fraction = 0.8);

// Half-open index range [begin, end) of the central `fraction` of n samples.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};
IndexRange interior_range(std::size_t n, double fraction = 0.8);

std::size_t next_power_of_two(std::size_t n);

}  // namespace sparsetf
