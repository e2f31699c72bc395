#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "harbench/error.hpp"
#include "harbench/text.hpp"
#include "harbench/windowing.hpp"

namespace harbench {

inline constexpr std::size_t kChannelFeatureCount = 11;

/// Per-channel statistics, in output order. ARA is appended once per
/// 3-axis triplet group, giving D = 11*C + G features per window.
inline constexpr std::array<const char*, kChannelFeatureCount> kChannelFeatureNames = {
    "A", "SD", "AAD", "Max", "Min", "Median", "Skew", "Kurt", "IQR", "AUC", "SqAUC"};

/// Linear-interpolation quantile at position (n-1)*q of an ascending series.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const std::size_t n = sorted.size();
  const double pos = static_cast<double>(n - 1) * q;
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// The 11 per-channel features of one window channel. Uses population
/// (1/W) moments; skew and excess kurtosis are 0 for near-constant input
/// (SD < 1e-12); AUC is a unit-spacing trapezoidal sum.
inline std::array<double, kChannelFeatureCount> channel_features(std::span<const double> series) {
  const std::size_t w = series.size();
  if (w < 2) throw ConfigError("channel_features: need a window of at least 2 samples");
  const auto n = static_cast<double>(w);

  double sum = 0.0;
  for (double x : series) sum += x;
  const double mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0, aad = 0.0;
  for (double x : series) {
    const double d = x - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
    aad += std::abs(d);
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  aad /= n;

  const double sd = std::sqrt(m2);
  double skew = 0.0;
  double kurt = 0.0;
  if (sd >= 1e-12) {
    skew = m3 / (m2 * sd);
    kurt = m4 / (m2 * m2) - 3.0;
  }

  const auto [min_it, max_it] = std::minmax_element(series.begin(), series.end());

  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = quantile_sorted(sorted, 0.5);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

  double auc = 0.0, sqauc = 0.0;
  for (std::size_t i = 0; i + 1 < w; ++i) {
    auc += 0.5 * (series[i] + series[i + 1]);
    sqauc += 0.5 * (series[i] * series[i] + series[i + 1] * series[i + 1]);
  }

  return {mean, sd, aad, *max_it, *min_it, median, skew, kurt, iqr, auc, sqauc};
}

/// Per-sample Euclidean magnitude of a 3-axis triplet.
inline std::vector<double> resultant_magnitude(std::span<const double> x,
                                               std::span<const double> y,
                                               std::span<const double> z) {
  if (x.size() != y.size() || x.size() != z.size()) {
    throw ConfigError("resultant_magnitude: channel lengths differ");
  }
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    r[i] = std::sqrt(x[i] * x[i] + y[i] * y[i] + z[i] * z[i]);
  }
  return r;
}

/// Average resultant acceleration: mean of the triplet magnitude series.
inline double ara(std::span<const double> x, std::span<const double> y,
                  std::span<const double> z) {
  if (x.empty()) throw ConfigError("ara: empty window");
  const std::vector<double> r = resultant_magnitude(x, y, z);
  double sum = 0.0;
  for (double v : r) sum += v;
  return sum / static_cast<double>(r.size());
}

struct FeatureLayout {
  std::vector<std::string> names;  // position -> "feature:channel" descriptor
  std::size_t channel_count = 0;
  std::size_t group_count = 0;

  std::size_t dim() const { return names.size(); }
};

inline FeatureLayout feature_layout(const DatasetManifest& m) {
  FeatureLayout layout;
  layout.channel_count = m.channel_count();
  layout.group_count = m.group_count();
  layout.names.reserve(kChannelFeatureCount * m.channel_count() + m.group_count());
  for (const auto& ch : m.channel_names) {
    for (const char* f : kChannelFeatureNames) {
      layout.names.push_back(std::string(f) + ":" + ch);
    }
  }
  for (const auto& g : m.triplet_groups) {
    layout.names.push_back("ARA:" + m.channel_names[g[0]] + "+" + m.channel_names[g[1]] + "+" +
                           m.channel_names[g[2]]);
  }
  return layout;
}

inline std::size_t feature_dim(const DatasetManifest& m) {
  return kChannelFeatureCount * m.channel_count() + m.group_count();
}

/// 11 features per channel (manifest channel order) followed by one ARA per
/// triplet group (manifest group order).
inline std::vector<double> extract_features(const Window& w, const DatasetManifest& m) {
  const std::size_t channels = m.channel_count();
  if (w.channels() != channels) {
    throw ConfigError("extract_features: window has " + std::to_string(w.channels()) +
                      " channels, manifest declares " + std::to_string(channels));
  }

  std::vector<std::vector<double>> series(channels, std::vector<double>(w.length));
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t t = 0; t < w.length; ++t) series[c][t] = w.sample(t, c);
  }

  std::vector<double> out;
  out.reserve(feature_dim(m));
  for (std::size_t c = 0; c < channels; ++c) {
    const auto f = channel_features(series[c]);
    out.insert(out.end(), f.begin(), f.end());
  }
  for (const auto& g : m.triplet_groups) {
    out.push_back(ara(series[g[0]], series[g[1]], series[g[2]]));
  }
  return out;
}

/// One row per window: provenance columns then the feature columns named by
/// the layout. Rewriting the same windows yields byte-identical output.
inline void write_feature_csv(std::ostream& os, const WindowSet& ws, const DatasetManifest& m) {
  const FeatureLayout layout = feature_layout(m);
  os << "trial_id,subject_id,activity_id,start_index";
  for (const auto& name : layout.names) os << ',' << name;
  os << '\n';
  for (const auto& w : ws.windows) {
    os << w.trial_id() << ',' << w.subject_id() << ',' << w.activity_id() << ',' << w.start;
    for (double v : extract_features(w, m)) os << ',' << g17(v);
    os << '\n';
  }
}

}  // namespace harbench
