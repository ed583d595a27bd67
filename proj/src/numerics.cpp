#include "sparsetf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparsetf {

std::vector<double> differentiate(std::span<const double> x, double dt) {
  const std::size_t n = x.size();
  if (n < 5) throw std::invalid_argument("differentiate needs at least 5 samples");
  std::vector<double> d(n);
  d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * dt);
  d[1] = (x[2] - x[0]) / (2.0 * dt);
  for (std::size_t i = 2; i + 2 < n; ++i)
    d[i] = (-x[i + 2] + 8.0 * x[i + 1] - 8.0 * x[i - 1] + x[i - 2]) / (12.0 * dt);
  d[n - 2] = (x[n - 1] - x[n - 3]) / (2.0 * dt);
  d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * dt);
  return d;
}

std::vector<double> cumulative_trapezoid(std::span<const double> x, double dt) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) out[i] = out[i - 1] + 0.5 * dt * (x[i] + x[i - 1]);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sequence");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    m = 0.5 * (m + lower);
  }
  return m;
}

IndexRange interior_range(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("interior fraction must be in (0, 1]");
  const auto drop = static_cast<std::size_t>(std::floor(0.5 * (1.0 - fraction) * static_cast<double>(n) + 1e-9));
  return {drop, n - drop};
}

double interior_relative_error(std::span<const double> estimate, std::span<const double> truth, double fraction) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("interior_relative_error: length mismatch");
  const auto r = interior_range(truth.size(), fraction);
  double num = 0.0, den = 0.0;
  for (std::size_t i = r.begin; i < r.end; ++i) {
    const double e = estimate[i] - truth[i];
    num += e * e;
    den += truth[i] * truth[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(num / den);
}

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p *= 2;
  return p;
}

}  // namespace sparsetf
