#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "harbench/error.hpp"
#include "harbench/linalg.hpp"
#include "harbench/matrix.hpp"

namespace harbench {

/// Per-feature z-score parameters. Fit on training-fold vectors only.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;  // entries below 1e-12 are replaced by 1

  std::size_t dim() const { return mean.size(); }
};

/// Population (1/N) mean and standard deviation per feature column.
/// Zero-variance features get stddev 1, so they pass through centered.
inline Scaler fit_scaler(const Matrix& train) {
  if (train.rows() == 0) throw ConfigError("fit_scaler: empty training set");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();

  Scaler s;
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = train.row(r);
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += row[c];
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = train.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = row[c] - s.mean[c];
      s.stddev[c] += diff * diff;
    }
  }
  for (double& v : s.stddev) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1.0;
  }
  return s;
}

inline std::vector<double> apply_scaler(const Scaler& s, std::span<const double> v) {
  if (v.size() != s.dim()) throw ConfigError("apply_scaler: dimension mismatch");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - s.mean[i]) / s.stddev[i];
  return out;
}

/// Algebraic inverse of apply_scaler.
inline std::vector<double> unapply_scaler(const Scaler& s, std::span<const double> v) {
  if (v.size() != s.dim()) throw ConfigError("unapply_scaler: dimension mismatch");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * s.stddev[i] + s.mean[i];
  return out;
}

inline Matrix apply_scaler(const Scaler& s, const Matrix& x) {
  if (x.cols() != s.dim()) throw ConfigError("apply_scaler: dimension mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* in = x.row(r);
    double* o = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) o[c] = (in[c] - s.mean[c]) / s.stddev[c];
  }
  return out;
}

/// Principal directions of scaler-centered feature vectors. The model keeps
/// no center of its own: inputs are expected to be scaler-output already.
struct PcaModel {
  Matrix basis;                    // D x d, orthonormal columns
  std::vector<double> eigenvalues; // retained, nonincreasing
  double retained_variance = 0.0;  // requested threshold
  double explained_ratio = 0.0;    // achieved cumulative eigenvalue share

  std::size_t input_dim() const { return basis.rows(); }
  std::size_t output_dim() const { return basis.cols(); }
};

/// Eigendecomposition of the training covariance; keeps the smallest number
/// of leading components whose eigenvalue share reaches retained_variance.
/// Sign convention: each column's largest-magnitude entry is positive, so a
/// refit cannot flip basis directions.
inline PcaModel fit_pca(const Matrix& train_scaled, double retained_variance) {
  if (train_scaled.rows() < 2) throw ConfigError("fit_pca: need at least 2 vectors");
  if (!(retained_variance > 0.0) || retained_variance > 1.0) {
    throw ConfigError("fit_pca: retained_variance must be in (0, 1]");
  }

  SymEig eig = jacobi_eigen(covariance(train_scaled));
  for (double& v : eig.values) {
    if (v < 0.0) v = 0.0;  // covariance is PSD; clip rounding noise
  }

  const std::size_t d_full = eig.values.size();
  double total = 0.0;
  for (double v : eig.values) total += v;

  std::size_t keep = 1;
  if (total > 0.0) {
    double cum = 0.0;
    for (keep = 0; keep < d_full;) {
      cum += eig.values[keep];
      ++keep;
      if (cum / total >= retained_variance - 1e-12) break;
    }
  }

  PcaModel m;
  m.retained_variance = retained_variance;
  m.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<long>(keep));
  m.basis = Matrix(d_full, keep);
  for (std::size_t k = 0; k < keep; ++k) {
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t r = 0; r < d_full; ++r) {
      const double mag = std::abs(eig.vectors(r, k));
      if (mag > best) {
        best = mag;
        arg = r;
      }
    }
    const double flip = eig.vectors(arg, k) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < d_full; ++r) m.basis(r, k) = flip * eig.vectors(r, k);
  }

  double cum = 0.0;
  for (double v : m.eigenvalues) cum += v;
  m.explained_ratio = total > 0.0 ? cum / total : 1.0;
  return m;
}

inline std::vector<double> apply_pca(const PcaModel& m, std::span<const double> v) {
  if (v.size() != m.input_dim()) throw ConfigError("apply_pca: dimension mismatch");
  std::vector<double> out(m.output_dim(), 0.0);
  for (std::size_t r = 0; r < m.input_dim(); ++r) {
    const double x = v[r];
    for (std::size_t k = 0; k < m.output_dim(); ++k) out[k] += m.basis(r, k) * x;
  }
  return out;
}

inline Matrix apply_pca(const PcaModel& m, const Matrix& x) {
  if (x.cols() != m.input_dim()) throw ConfigError("apply_pca: dimension mismatch");
  Matrix out(x.rows(), m.output_dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double* in = x.row(r);
    double* o = out.row(r);
    for (std::size_t i = 0; i < m.input_dim(); ++i) {
      const double xi = in[i];
      for (std::size_t k = 0; k < m.output_dim(); ++k) o[k] += m.basis(i, k) * xi;
    }
  }
  return out;
}

}  // namespace harbench
