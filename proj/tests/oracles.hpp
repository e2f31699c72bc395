#pragma once

// Definition-literal reference implementations used only by tests. Each one
// recomputes its quantity from scratch (separate passes, its own sorting and
// moment code) so it stays independent of the library's computation path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double population_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

inline double aad(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += std::abs(x - m);
  return s / static_cast<double>(v.size());
}

inline double maximum(const std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = x > m ? x : m;
  return m;
}

inline double minimum(const std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = x < m ? x : m;
  return m;
}

inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double w = pos - std::floor(pos);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }

inline double iqr(const std::vector<double>& v) { return quantile(v, 0.75) - quantile(v, 0.25); }

inline double central_moment(const std::vector<double>& v, int k) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += std::pow(x - m, k);
  return s / static_cast<double>(v.size());
}

inline double skew(const std::vector<double>& v) {
  if (population_sd(v) < 1e-12) return 0.0;
  return central_moment(v, 3) / std::pow(central_moment(v, 2), 1.5);
}

inline double excess_kurtosis(const std::vector<double>& v) {
  if (population_sd(v) < 1e-12) return 0.0;
  const double m2 = central_moment(v, 2);
  return central_moment(v, 4) / (m2 * m2) - 3.0;
}

inline double auc(const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) s += (v[i] + v[i + 1]) / 2.0;
  return s;
}

inline double sq_auc(const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) s += (v[i] * v[i] + v[i + 1] * v[i + 1]) / 2.0;
  return s;
}

inline double ara(const std::vector<double>& x, const std::vector<double>& y,
                  const std::vector<double>& z) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
  }
  return s / static_cast<double>(x.size());
}

/// All 12 feature values of one channel triple would need a layout; tests
/// instead compare feature by feature via the functions above.

/// Closed-form eigenvalues of a symmetric 2x2 matrix [[a, b], [b, c]],
/// larger first.
inline std::pair<double, double> eig2x2(double a, double b, double c) {
  const double trace_half = (a + c) / 2.0;
  const double disc = std::sqrt((a - c) * (a - c) / 4.0 + b * b);
  return {trace_half + disc, trace_half - disc};
}

/// Relative error with a floor that keeps near-zero comparisons meaningful.
inline double rel_err(double got, double want, double floor_scale = 1e-9) {
  const double denom = std::max({std::abs(got), std::abs(want), floor_scale});
  return std::abs(got - want) / denom;
}

}  // namespace oracle
