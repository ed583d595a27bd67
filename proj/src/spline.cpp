#include "sparsetf/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparsetf {

SplineResampler::SplineResampler(std::vector<double> knots, std::span<const double> queries,
                                 SplineBoundary boundary, double period)
    : knots_(std::move(knots)), boundary_(boundary), period_(period) {
  const std::size_t n = knots_.size();
  if (n < 4) throw std::invalid_argument("cubic spline needs at least 4 knots");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(knots_[i + 1] > knots_[i])) throw std::invalid_argument("spline knots must be strictly increasing");
    widths_.push_back(knots_[i + 1] - knots_[i]);
  }

  if (boundary_ == SplineBoundary::kNotAKnotMirror) {
    // Unknowns M_1..M_{n-2}; M_0 and M_{n-1} are eliminated with the
    // not-a-knot conditions.
    const std::size_t m = n - 2;
    lower_.assign(m, 0.0);
    diag_.assign(m, 0.0);
    upper_.assign(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const std::size_t i = r + 1;
      const double hl = widths_[i - 1];
      const double hr = widths_[i];
      lower_[r] = hl;
      diag_[r] = 2.0 * (hl + hr);
      upper_[r] = hr;
    }
    const double h0 = widths_[0], h1 = widths_[1];
    diag_[0] += h0 * (h0 + h1) / h1;
    upper_[0] -= h0 * h0 / h1;
    const double ha = widths_[n - 3], hb = widths_[n - 2];
    diag_[m - 1] += hb * (ha + hb) / ha;
    lower_[m - 1] -= hb * hb / ha;
  } else {
    if (!(period_ > knots_.back() - knots_.front()))
      throw std::invalid_argument("spline period must exceed the knot span");
    widths_.push_back(knots_.front() + period_ - knots_.back());
    lower_.assign(n, 0.0);
    diag_.assign(n, 0.0);
    upper_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double hl = widths_[(i + n - 1) % n];
      const double hr = widths_[i];
      lower_[i] = hl;
      diag_[i] = 2.0 * (hl + hr);
      upper_[i] = hr;
    }
    // Corner entries A[0][n-1] = A[n-1][0] = h_{n-1}.
    const double corner = widths_[n - 1];
    cyclic_gamma_ = -diag_[0];
    diag_[0] -= cyclic_gamma_;
    diag_[n - 1] -= corner * corner / cyclic_gamma_;
  }

  const std::size_t m = diag_.size();
  cprime_.assign(m, 0.0);
  denom_.assign(m, 0.0);
  denom_[0] = diag_[0];
  cprime_[0] = upper_[0] / denom_[0];
  for (std::size_t i = 1; i < m; ++i) {
    denom_[i] = diag_[i] - lower_[i] * cprime_[i - 1];
    cprime_[i] = upper_[i] / denom_[i];
  }

  if (boundary_ == SplineBoundary::kPeriodic) {
    const double corner = widths_[n - 1];
    std::vector<double> u(n, 0.0);
    u[0] = cyclic_gamma_;
    u[n - 1] = corner;
    cyclic_z_ = solve_tridiagonal(std::move(u));
    cyclic_factor_ = 1.0 + cyclic_z_[0] + corner * cyclic_z_[n - 1] / cyclic_gamma_;
  }

  index_.resize(queries.size());
  offset_.resize(queries.size());
  const double lo = knots_.front();
  const double hi = knots_.back();
  for (std::size_t q = 0; q < queries.size(); ++q) {
    double x = queries[q];
    if (!std::isfinite(x)) throw std::invalid_argument("spline query is not finite");
    if (boundary_ == SplineBoundary::kNotAKnotMirror) {
      for (int pass = 0; pass < 4 && (x < lo || x > hi); ++pass) {
        if (x < lo) x = 2.0 * lo - x;
        if (x > hi) x = 2.0 * hi - x;
      }
      x = std::clamp(x, lo, hi);
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
      std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - knots_.begin() - 1, 0));
      i = std::min(i, n - 2);
      index_[q] = i;
      offset_[q] = x - knots_[i];
    } else {
      double u = std::fmod(x - lo, period_);
      if (u < 0.0) u += period_;
      x = lo + u;
      auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
      const std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - knots_.begin() - 1, 0));
      index_[q] = std::min(i, n - 1);
      offset_[q] = x - knots_[index_[q]];
    }
  }
}

std::vector<double> SplineResampler::solve_tridiagonal(std::vector<double> rhs) const {
  const std::size_t m = rhs.size();
  rhs[0] /= denom_[0];
  for (std::size_t i = 1; i < m; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) / denom_[i];
  for (std::size_t i = m - 1; i-- > 0;) rhs[i] -= cprime_[i] * rhs[i + 1];
  return rhs;
}

std::vector<double> SplineResampler::second_derivatives(std::span<const double> y) const {
  const std::size_t n = knots_.size();
  if (y.size() != n) throw std::invalid_argument("spline data length does not match knot count");
  std::vector<double> slope(widths_.size());
  for (std::size_t i = 0; i < widths_.size(); ++i) slope[i] = (y[(i + 1) % n] - y[i]) / widths_[i];

  if (boundary_ == SplineBoundary::kNotAKnotMirror) {
    std::vector<double> rhs(n - 2);
    for (std::size_t r = 0; r < n - 2; ++r) rhs[r] = 6.0 * (slope[r + 1] - slope[r]);
    auto inner = solve_tridiagonal(std::move(rhs));
    std::vector<double> m2(n);
    std::copy(inner.begin(), inner.end(), m2.begin() + 1);
    const double h0 = widths_[0], h1 = widths_[1];
    m2[0] = ((h0 + h1) * m2[1] - h0 * m2[2]) / h1;
    const double ha = widths_[n - 3], hb = widths_[n - 2];
    m2[n - 1] = ((ha + hb) * m2[n - 2] - hb * m2[n - 3]) / ha;
    return m2;
  }

  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = 6.0 * (slope[i] - slope[(i + n - 1) % n]);
  return solve_periodic(std::move(rhs));
}

std::vector<double> SplineResampler::solve_periodic(std::vector<double> rhs) const {
  const std::size_t n = knots_.size();
  auto x = solve_tridiagonal(std::move(rhs));
  const double corner = widths_[n - 1];
  const double fact = (x[0] + corner * x[n - 1] / cyclic_gamma_) / cyclic_factor_;
  for (std::size_t i = 0; i < n; ++i) x[i] -= fact * cyclic_z_[i];
  return x;
}

std::vector<double> SplineResampler::apply(std::span<const double> y) const {
  const std::size_t n = knots_.size();
  const auto m2 = second_derivatives(y);
  std::vector<double> out(index_.size());
  for (std::size_t q = 0; q < index_.size(); ++q) {
    const std::size_t i = index_[q];
    const std::size_t j = (i + 1) % n;
    const double h = widths_[i];
    const double b = offset_[q];
    const double a = h - b;
    out[q] = (m2[i] * a * a * a + m2[j] * b * b * b) / (6.0 * h) + (y[i] - m2[i] * h * h / 6.0) * a / h +
             (y[j] - m2[j] * h * h / 6.0) * b / h;
  }
  return out;
}

std::vector<double> SplineResampler::apply_transpose(std::span<const double> g) const {
  if (boundary_ != SplineBoundary::kPeriodic) throw std::logic_error("apply_transpose needs a periodic spline");
  if (g.size() != index_.size()) throw std::invalid_argument("spline transpose: length does not match query count");
  const std::size_t n = knots_.size();
  std::vector<double> gy(n, 0.0), gm(n, 0.0);
  for (std::size_t q = 0; q < index_.size(); ++q) {
    const std::size_t i = index_[q];
    const std::size_t j = (i + 1) % n;
    const double h = widths_[i];
    const double b = offset_[q];
    const double a = h - b;
    gy[i] += g[q] * a / h;
    gy[j] += g[q] * b / h;
    gm[i] += g[q] * (a * a * a / (6.0 * h) - h * a / 6.0);
    gm[j] += g[q] * (b * b * b / (6.0 * h) - h * b / 6.0);
  }
  // The second derivatives are A⁻¹·D·y with A symmetric, so the transpose is Dᵀ·A⁻¹.
  const auto v = solve_periodic(std::move(gm));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const double gs = 6.0 * (v[i] - v[j]) / widths_[i];
    gy[j] += gs;
    gy[i] -= gs;
  }
  return gy;
}

std::vector<double> spline_interpolate(std::span<const double> knots, std::span<const double> values,
                                       std::span<const double> queries, SplineBoundary boundary, double period) {
  SplineResampler r(std::vector<double>(knots.begin(), knots.end()), queries, boundary, period);
  return r.apply(values);
}

}  // namespace sparsetf
