#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "harbench/error.hpp"
#include "harbench/matrix.hpp"
#include "harbench/rng.hpp"
#include "harbench/text.hpp"

namespace harbench {

/// Hidden layer widths of the classifier: d -> 128 -> 64 -> 32 -> K softmax.
inline constexpr std::array<std::size_t, 3> kHiddenSizes = {128, 64, 32};

struct MlpParams {
  std::vector<std::size_t> dims;            // {d, 128, 64, 32, K}
  std::vector<Matrix> weights;              // weights[l] is dims[l+1] x dims[l]
  std::vector<std::vector<double>> biases;  // biases[l] has dims[l+1] entries
  double leaky_slope = 0.01;
  std::uint64_t seed = 0;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t input_dim() const { return dims.front(); }
  std::size_t class_count() const { return dims.back(); }
};

inline std::size_t parameter_count(const MlpParams& p) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    n += p.dims[l] * p.dims[l + 1] + p.dims[l + 1];
  }
  return n;
}

/// He-scaled normal weights (variance 2/fan_in), zero biases; fully
/// determined by the seed.
inline MlpParams init_mlp(std::size_t input_dim, std::size_t classes, std::uint64_t seed,
                          double leaky_slope = 0.01) {
  if (input_dim < 1) throw ConfigError("init_mlp: input dimension must be >= 1");
  if (classes < 2) throw ConfigError("init_mlp: need at least 2 classes");

  MlpParams p;
  p.dims = {input_dim, kHiddenSizes[0], kHiddenSizes[1], kHiddenSizes[2], classes};
  p.leaky_slope = leaky_slope;
  p.seed = seed;

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < p.dims.size(); ++l) {
    const std::size_t fan_in = p.dims[l];
    const std::size_t fan_out = p.dims[l + 1];
    const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data()) v = sigma * rng.normal();
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(fan_out, 0.0);
  }
  return p;
}

struct ForwardCache {
  std::vector<Matrix> preacts;  // z per layer; back() holds the logits
  std::vector<Matrix> acts;     // acts[0] is the input batch
  Matrix probs;                 // B x K softmax rows
};

namespace detail {

inline Matrix affine(const Matrix& a, const Matrix& w, const std::vector<double>& b) {
  Matrix z(a.rows(), w.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double* in = a.row(r);
    double* out = z.row(r);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const double* wr = w.row(o);
      double acc = b[o];
      for (std::size_t i = 0; i < w.cols(); ++i) acc += wr[i] * in[i];
      out[o] = acc;
    }
  }
  return z;
}

inline void leaky_relu_inplace(Matrix& z, double slope) {
  for (double& v : z.data()) {
    if (v <= 0.0) v *= slope;  // zero input takes the slope branch
  }
}

}  // namespace detail

/// Forward pass keeping pre-activations and activations for backprop.
inline ForwardCache forward_cached(const MlpParams& p, const Matrix& batch) {
  if (batch.cols() != p.input_dim()) throw ConfigError("forward: dimension mismatch");

  ForwardCache cache;
  cache.acts.push_back(batch);
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    Matrix z = detail::affine(cache.acts.back(), p.weights[l], p.biases[l]);
    cache.preacts.push_back(z);
    if (l + 1 < p.layer_count()) {
      detail::leaky_relu_inplace(z, p.leaky_slope);
      cache.acts.push_back(std::move(z));
    }
  }

  const Matrix& logits = cache.preacts.back();
  cache.probs = Matrix(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double* z = logits.row(r);
    double* out = cache.probs.row(r);
    double zmax = z[0];
    for (std::size_t k = 1; k < logits.cols(); ++k) zmax = std::max(zmax, z[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.cols(); ++k) {
      out[k] = std::exp(z[k] - zmax);
      sum += out[k];
    }
    for (std::size_t k = 0; k < logits.cols(); ++k) out[k] /= sum;
  }
  return cache;
}

/// Softmax probabilities, one row per batch row.
inline Matrix forward(const MlpParams& p, const Matrix& batch) {
  return forward_cached(p, batch).probs;
}

/// Mean cross-entropy of the batch, computed via log-sum-exp on the logits.
inline double loss_from_logits(const Matrix& logits, const std::vector<int>& labels) {
  double loss = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double* z = logits.row(r);
    double zmax = z[0];
    for (std::size_t k = 1; k < logits.cols(); ++k) zmax = std::max(zmax, z[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.cols(); ++k) sum += std::exp(z[k] - zmax);
    loss += zmax + std::log(sum) - z[static_cast<std::size_t>(labels[r])];
  }
  return loss / static_cast<double>(logits.rows());
}

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

namespace detail {

inline void check_labels(const std::vector<int>& labels, std::size_t batch, std::size_t classes) {
  if (labels.size() != batch) throw ConfigError("labels: size does not match batch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ConfigError("labels: class " + std::to_string(y) + " out of range [0, " +
                        std::to_string(classes) + ")");
    }
  }
}

inline std::pair<double, MlpGradients> backward(const MlpParams& p, const ForwardCache& cache,
                                                const std::vector<int>& labels) {
  const std::size_t batch = cache.probs.rows();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const double loss = loss_from_logits(cache.preacts.back(), labels);

  MlpGradients g;
  g.weights.resize(p.layer_count());
  g.biases.resize(p.layer_count());

  // d(mean cross-entropy)/d(logits) = (softmax - onehot) / B
  Matrix dz = cache.probs;
  for (std::size_t r = 0; r < batch; ++r) {
    dz(r, static_cast<std::size_t>(labels[r])) -= 1.0;
  }
  for (double& v : dz.data()) v *= inv_batch;

  for (std::size_t l = p.layer_count(); l-- > 0;) {
    const Matrix& a = cache.acts[l];
    Matrix& dw = g.weights[l];
    dw = Matrix(p.weights[l].rows(), p.weights[l].cols());
    auto& db = g.biases[l];
    db.assign(p.weights[l].rows(), 0.0);

    for (std::size_t r = 0; r < batch; ++r) {
      const double* dzr = dz.row(r);
      const double* ar = a.row(r);
      for (std::size_t o = 0; o < dw.rows(); ++o) {
        const double d = dzr[o];
        db[o] += d;
        double* dwr = dw.row(o);
        for (std::size_t i = 0; i < dw.cols(); ++i) dwr[i] += d * ar[i];
      }
    }

    if (l == 0) break;
    Matrix da(batch, p.weights[l].cols());
    for (std::size_t r = 0; r < batch; ++r) {
      const double* dzr = dz.row(r);
      double* dar = da.row(r);
      for (std::size_t o = 0; o < p.weights[l].rows(); ++o) {
        const double d = dzr[o];
        const double* wr = p.weights[l].row(o);
        for (std::size_t i = 0; i < p.weights[l].cols(); ++i) dar[i] += d * wr[i];
      }
    }
    const Matrix& z_prev = cache.preacts[l - 1];
    for (std::size_t r = 0; r < batch; ++r) {
      const double* zr = z_prev.row(r);
      double* dar = da.row(r);
      for (std::size_t i = 0; i < da.cols(); ++i) {
        if (zr[i] <= 0.0) dar[i] *= p.leaky_slope;
      }
    }
    dz = std::move(da);
  }
  return {loss, std::move(g)};
}

}  // namespace detail

/// Mean cross-entropy and its analytic gradient for one batch.
inline std::pair<double, MlpGradients> loss_and_grad(const MlpParams& p, const Matrix& batch,
                                                     const std::vector<int>& labels) {
  detail::check_labels(labels, batch.rows(), p.class_count());
  const ForwardCache cache = forward_cached(p, batch);
  return detail::backward(p, cache, labels);
}

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t epochs = 250;  // 250 for variant V1, 200 for V2
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t shuffle_seed = 0;

  void validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
  }
};

struct TrainHistory {
  std::vector<double> loss;      // per-epoch mean training loss
  std::vector<double> accuracy;  // per-epoch training accuracy
};

/// Adam over seeded-shuffled minibatches (the last batch of an epoch may be
/// short). Deterministic given (params seed, shuffle_seed, data).
inline std::pair<MlpParams, TrainHistory> train(MlpParams p, const Matrix& x,
                                                const std::vector<int>& y,
                                                const TrainConfig& cfg) {
  cfg.validate();
  if (x.rows() < 1) throw ConfigError("train: empty training set");
  detail::check_labels(y, x.rows(), p.class_count());
  if (x.cols() != p.input_dim()) throw ConfigError("train: dimension mismatch");

  const std::size_t n = x.rows();
  MlpGradients m, v;  // Adam first/second moment state
  m.weights.reserve(p.layer_count());
  v.weights.reserve(p.layer_count());
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    m.weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
    v.weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
    m.biases.emplace_back(p.biases[l].size(), 0.0);
    v.biases.emplace_back(p.biases[l].size(), 0.0);
  }

  TrainHistory history;
  Rng shuffle_rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
      const std::size_t size = std::min(cfg.batch_size, n - begin);
      Matrix batch(size, x.cols());
      std::vector<int> labels(size);
      for (std::size_t r = 0; r < size; ++r) {
        const std::size_t src = order[begin + r];
        const double* row = x.row(src);
        std::copy(row, row + x.cols(), batch.row(r));
        labels[r] = y[src];
      }

      const ForwardCache cache = forward_cached(p, batch);
      auto [loss, grad] = detail::backward(p, cache, labels);
      if (!std::isfinite(loss)) {
        throw std::runtime_error("train: loss became non-finite at epoch " +
                                 std::to_string(epoch + 1) + "; consider a smaller learning_rate (" +
                                 g17(cfg.learning_rate) + ")");
      }
      loss_sum += loss * static_cast<double>(size);
      for (std::size_t r = 0; r < size; ++r) {
        const double* probs = cache.probs.row(r);
        std::size_t arg = 0;
        for (std::size_t k = 1; k < p.class_count(); ++k) {
          if (probs[k] > probs[arg]) arg = k;
        }
        if (arg == static_cast<std::size_t>(labels[r])) ++correct;
      }

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto adam = [&](double& theta, double g_i, double& m_i, double& v_i) {
        m_i = cfg.beta1 * m_i + (1.0 - cfg.beta1) * g_i;
        v_i = cfg.beta2 * v_i + (1.0 - cfg.beta2) * g_i * g_i;
        theta -= cfg.learning_rate * (m_i / bc1) / (std::sqrt(v_i / bc2) + cfg.epsilon);
      };
      for (std::size_t l = 0; l < p.layer_count(); ++l) {
        auto& w = p.weights[l].data();
        const auto& gw = grad.weights[l].data();
        auto& mw = m.weights[l].data();
        auto& vw = v.weights[l].data();
        for (std::size_t i = 0; i < w.size(); ++i) adam(w[i], gw[i], mw[i], vw[i]);
        for (std::size_t i = 0; i < p.biases[l].size(); ++i) {
          adam(p.biases[l][i], grad.biases[l][i], m.biases[l][i], v.biases[l][i]);
        }
      }
    }

    for (std::size_t l = 0; l < p.layer_count(); ++l) {
      for (double w : p.weights[l].data()) {
        if (!std::isfinite(w)) {
          throw std::runtime_error("train: parameters became non-finite at epoch " +
                                   std::to_string(epoch + 1) +
                                   "; consider a smaller learning_rate (" +
                                   g17(cfg.learning_rate) + ")");
        }
      }
    }

    history.loss.push_back(loss_sum / static_cast<double>(n));
    history.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
  }
  return {std::move(p), std::move(history)};
}

/// Argmax class of the forward probabilities; ties go to the lowest index.
inline int predict(const MlpParams& p, std::span<const double> v) {
  Matrix batch(1, v.size());
  std::copy(v.begin(), v.end(), batch.row(0));
  const Matrix probs = forward(p, batch);
  std::size_t arg = 0;
  for (std::size_t k = 1; k < probs.cols(); ++k) {
    if (probs(0, k) > probs(0, arg)) arg = k;
  }
  return static_cast<int>(arg);
}

}  // namespace harbench
