#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "harbench/error.hpp"
#include "harbench/matrix.hpp"

namespace harbench {

/// Covariance of the rows of x (N x D), 1/(N-1) normalization, columns
/// centered by their empirical mean.
inline Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw ConfigError("covariance: need at least 2 rows");

  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = x.row(r);
    for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  Matrix cov(d, d);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = x.row(r);
    for (std::size_t c = 0; c < d; ++c) centered[c] = row[c] - mean[c];
    for (std::size_t i = 0; i < d; ++i) {
      const double ci = centered[i];
      double* out = cov.row(i);
      for (std::size_t j = i; j < d; ++j) out[j] += ci * centered[j];
    }
  }
  const double scale = 1.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) *= scale;
      cov(j, i) = cov(i, j);
    }
  }
  return cov;
}

struct SymEig {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k is the eigenvector of values[k]
};

namespace detail {

inline double off_diagonal_mass(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

inline double frobenius(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi diagonalization of a symmetric matrix. Sweeps until the
/// off-diagonal Frobenius mass falls below tol (relative to the input norm).
/// Eigenpairs come back sorted by eigenvalue, descending; ties keep their
/// original diagonal order, so the result is deterministic.
inline SymEig jacobi_eigen(Matrix a, double tol = 1e-10, std::size_t max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n) throw ConfigError("jacobi_eigen: matrix must be square");

  Matrix v(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const double scale = std::max(detail::frobenius(a), 1e-300);
  std::size_t sweep = 0;
  while (detail::off_diagonal_mass(a) > tol * scale) {
    if (++sweep > max_sweeps) {
      throw std::runtime_error("jacobi_eigen: no convergence after " +
                               std::to_string(max_sweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;

        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(tau) > 1e150) {
          t = 1.0 / (2.0 * tau);  // avoids overflow in sqrt(1 + tau^2)
        } else {
          t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        const double app = a(p, p);
        const double aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(p, k) = a(k, p);
          a(k, q) = s * akp + c * akq;
          a(q, k) = a(k, q);
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymEig eig;
  eig.values.resize(n);
  eig.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    eig.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) eig.vectors(r, k) = v(r, order[k]);
  }
  return eig;
}

}  // namespace harbench
