#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "harbench/error.hpp"
#include "harbench/matrix.hpp"
#include "harbench/text.hpp"

namespace harbench {

enum class WindowingTechnique {
  full_non_overlapping,
  semi_non_overlapping,
  leave_one_trial_out,
};

inline const char* to_string(WindowingTechnique t) {
  switch (t) {
    case WindowingTechnique::full_non_overlapping: return "full_non_overlapping";
    case WindowingTechnique::semi_non_overlapping: return "semi_non_overlapping";
    case WindowingTechnique::leave_one_trial_out: return "leave_one_trial_out";
  }
  return "?";
}

inline std::optional<WindowingTechnique> windowing_from_string(std::string_view s) {
  const std::string n = normalized_name(s);
  if (n == "fullnonoverlapping" || n == "full") return WindowingTechnique::full_non_overlapping;
  if (n == "seminonoverlapping" || n == "semi") return WindowingTechnique::semi_non_overlapping;
  if (n == "leaveonetrialout" || n == "loto") return WindowingTechnique::leave_one_trial_out;
  return std::nullopt;
}

inline const std::set<WindowingTechnique>& all_windowing_techniques() {
  static const std::set<WindowingTechnique> all = {
      WindowingTechnique::full_non_overlapping,
      WindowingTechnique::semi_non_overlapping,
      WindowingTechnique::leave_one_trial_out,
  };
  return all;
}

/// Support matrix for the stock datasets; unknown dataset names are
/// unconstrained. OPPORTUNITY is the one stock dataset limited to
/// semi-non-overlapping windows.
inline std::optional<std::set<WindowingTechnique>> stock_dataset_support(std::string_view name) {
  const std::string n = normalized_name(name);
  if (n == "opportunity") {
    return std::set<WindowingTechnique>{WindowingTechnique::semi_non_overlapping};
  }
  if (n == "mhealth" || n == "uschad" || n == "utd1" || n == "utd2" || n == "wharf" ||
      n == "wisdm") {
    return all_windowing_techniques();
  }
  return std::nullopt;
}

struct TrialSource {
  std::string subject_id;
  int activity_id = 0;  // label as recorded by the source dataset
  std::string trial_id;
  std::string path;
};

struct DatasetManifest {
  std::string name;
  double sample_rate_hz = 0.0;
  std::vector<std::string> channel_names;
  std::vector<std::array<std::size_t, 3>> triplet_groups;  // 3-axis sensor groups
  double window_seconds = 0.0;
  std::vector<TrialSource> trial_sources;
  std::set<WindowingTechnique> supported_windowing;
  std::filesystem::path base_dir;  // directory the manifest was loaded from

  std::size_t channel_count() const { return channel_names.size(); }
  std::size_t group_count() const { return triplet_groups.size(); }
  bool supports(WindowingTechnique t) const { return supported_windowing.count(t) > 0; }

  /// Window length in samples: floor(window_seconds * sample_rate_hz),
  /// rounded down to the nearest even integer so a 50% stride is integral.
  std::size_t window_samples() const {
    auto w = static_cast<std::size_t>(window_seconds * sample_rate_hz);
    if (w % 2 != 0 && w > 0) --w;
    return w;
  }
};

struct Trial {
  std::string subject_id;
  int activity_id = 0;  // remapped to [0, K) within a TrialSet
  std::string trial_id;
  Matrix samples;  // T x C, sensor units as recorded
  double sample_rate_hz = 0.0;

  std::size_t length() const { return samples.rows(); }
  std::size_t channels() const { return samples.cols(); }
};

struct SkippedTrial {
  std::string trial_id;
  std::string reason;
};

struct TrialSet {
  DatasetManifest manifest;
  std::vector<Trial> trials;
  int class_count = 0;
  std::vector<std::string> subject_ids;  // sorted distinct
  std::vector<int> source_labels;        // source_labels[k] = original label of class k
  std::vector<SkippedTrial> skipped;     // trials dropped at load, with reasons
};

inline void validate_manifest(const DatasetManifest& m) {
  if (m.name.empty()) throw ConfigError("manifest: name must not be empty");
  if (!(m.sample_rate_hz > 0.0)) throw ConfigError("manifest: sample_rate_hz must be positive");
  if (!(m.window_seconds > 0.0)) throw ConfigError("manifest: window_seconds must be positive");
  if (m.channel_names.empty()) throw ConfigError("manifest: channel_names must not be empty");
  if (m.window_samples() < 2) {
    throw ConfigError("manifest: window_seconds * sample_rate_hz yields a window of " +
                      std::to_string(m.window_samples()) + " samples; need at least 2");
  }

  std::set<std::size_t> used;
  for (const auto& g : m.triplet_groups) {
    if (g[0] == g[1] || g[0] == g[2] || g[1] == g[2]) {
      throw ConfigError("manifest: duplicate channel in triplet (" + std::to_string(g[0]) + "," +
                        std::to_string(g[1]) + "," + std::to_string(g[2]) + ")");
    }
    for (std::size_t idx : g) {
      if (idx >= m.channel_count()) {
        throw ConfigError("manifest: triplet channel index " + std::to_string(idx) +
                          " out of range (C=" + std::to_string(m.channel_count()) + ")");
      }
      if (!used.insert(idx).second) {
        throw ConfigError("manifest: channel " + std::to_string(idx) +
                          " appears in more than one triplet group");
      }
    }
  }

  if (m.supported_windowing.empty()) {
    throw ConfigError("manifest: supported_windowing must not be empty");
  }
  if (auto stock = stock_dataset_support(m.name)) {
    if (*stock != m.supported_windowing) {
      throw ConfigError("manifest: supported_windowing for stock dataset '" + m.name +
                        "' does not match its known support matrix");
    }
  }

  std::set<std::string> trial_ids;
  for (const auto& src : m.trial_sources) {
    if (src.trial_id.empty()) throw ConfigError("manifest: empty trial_id");
    if (!trial_ids.insert(src.trial_id).second) {
      throw ConfigError("manifest: duplicate trial_id '" + src.trial_id + "'");
    }
    if (src.subject_id.empty()) {
      throw ConfigError("manifest: trial '" + src.trial_id + "' has empty subject_id");
    }
  }
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j,
                                          const std::filesystem::path& base_dir = {}) {
  DatasetManifest m;
  m.base_dir = base_dir;
  try {
    m.name = j.at("name").get<std::string>();
    m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    m.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    m.window_seconds = j.at("window_seconds").get<double>();
    for (const auto& g : j.value("triplet_groups", nlohmann::json::array())) {
      if (!g.is_array() || g.size() != 3) {
        throw ConfigError("manifest: each triplet group must be an array of 3 channel indices");
      }
      m.triplet_groups.push_back({g.at(0).get<std::size_t>(), g.at(1).get<std::size_t>(),
                                  g.at(2).get<std::size_t>()});
    }
    if (j.contains("supported_windowing")) {
      for (const auto& s : j.at("supported_windowing")) {
        auto t = windowing_from_string(s.get<std::string>());
        if (!t) throw ConfigError("manifest: unknown windowing technique '" + s.get<std::string>() + "'");
        m.supported_windowing.insert(*t);
      }
    } else if (auto stock = stock_dataset_support(m.name)) {
      m.supported_windowing = *stock;
    } else {
      m.supported_windowing = all_windowing_techniques();
    }
    for (const auto& t : j.value("trial_sources", nlohmann::json::array())) {
      TrialSource src;
      src.subject_id = t.at("subject_id").get<std::string>();
      src.activity_id = t.at("activity_id").get<int>();
      src.trial_id = t.at("trial_id").get<std::string>();
      src.path = t.at("path").get<std::string>();
      m.trial_sources.push_back(std::move(src));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  validate_manifest(m);
  return m;
}

inline nlohmann::ordered_json manifest_to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["sample_rate_hz"] = m.sample_rate_hz;
  j["channel_names"] = m.channel_names;
  j["triplet_groups"] = nlohmann::json::array();
  for (const auto& g : m.triplet_groups) j["triplet_groups"].push_back({g[0], g[1], g[2]});
  j["window_seconds"] = m.window_seconds;
  j["supported_windowing"] = nlohmann::json::array();
  for (auto t : m.supported_windowing) j["supported_windowing"].push_back(to_string(t));
  j["trial_sources"] = nlohmann::json::array();
  for (const auto& s : m.trial_sources) {
    j["trial_sources"].push_back({{"subject_id", s.subject_id},
                                  {"activity_id", s.activity_id},
                                  {"trial_id", s.trial_id},
                                  {"path", s.path}});
  }
  return j;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest parse error in " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

namespace detail {

/// Trial file resolution order: absolute path as-is, then relative to the
/// manifest directory, then relative to $HARBENCH_DATA_DIR.
inline std::filesystem::path resolve_trial_path(const DatasetManifest& m, const std::string& rel) {
  namespace fs = std::filesystem;
  fs::path p(rel);
  if (p.is_absolute()) return p;
  if (!m.base_dir.empty()) {
    fs::path candidate = m.base_dir / p;
    if (fs::exists(candidate)) return candidate;
  }
  if (const char* root = std::getenv("HARBENCH_DATA_DIR")) {
    fs::path candidate = fs::path(root) / p;
    if (fs::exists(candidate)) return candidate;
  }
  return m.base_dir.empty() ? p : m.base_dir / p;
}

/// Canonical trial file: CSV, one row per time step, C numeric columns,
/// no header.
inline Matrix read_trial_csv(const std::filesystem::path& path, std::size_t channels,
                             const std::string& trial_id) {
  std::ifstream in(path);
  if (!in) throw DataError("trial '" + trial_id + "': cannot open file " + path.string());

  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::size_t col = 0;
    const char* p = line.c_str();
    const char* end = p + line.size();
    while (p < end) {
      char* after = nullptr;
      const double v = std::strtod(p, &after);
      if (after == p) {
        throw DataError("trial '" + trial_id + "': non-numeric value at " + path.string() + ":" +
                        std::to_string(line_no));
      }
      if (!std::isfinite(v)) {
        throw DataError("trial '" + trial_id + "': non-finite sample at " + path.string() + ":" +
                        std::to_string(line_no) + ", column " + std::to_string(col + 1));
      }
      values.push_back(v);
      ++col;
      p = after;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end) {
        if (*p != ',') {
          throw DataError("trial '" + trial_id + "': expected ',' at " + path.string() + ":" +
                          std::to_string(line_no));
        }
        ++p;
      }
    }
    if (col != channels) {
      throw DataError("trial '" + trial_id + "': expected " + std::to_string(channels) +
                      " columns, got " + std::to_string(col) + " at " + path.string() + ":" +
                      std::to_string(line_no));
    }
    ++rows;
  }
  if (rows == 0) throw DataError("trial '" + trial_id + "': empty file " + path.string());

  Matrix samples(rows, channels);
  samples.data() = std::move(values);
  return samples;
}

}  // namespace detail

/// Loads every trial source in the manifest. Trials shorter than one window
/// are skipped and counted; labels are remapped to a contiguous 0..K-1 range
/// (ascending source-label order, recorded in source_labels).
inline TrialSet load_trials(const DatasetManifest& manifest) {
  validate_manifest(manifest);
  if (manifest.trial_sources.empty()) {
    throw DataError("no trials: manifest '" + manifest.name + "' lists no trial sources");
  }

  TrialSet ts;
  ts.manifest = manifest;
  const std::size_t w = manifest.window_samples();

  for (const auto& src : manifest.trial_sources) {
    const auto path = detail::resolve_trial_path(manifest, src.path);
    Matrix samples = detail::read_trial_csv(path, manifest.channel_count(), src.trial_id);
    if (samples.rows() < w) {
      ts.skipped.push_back({src.trial_id,
                            "shorter than one window (" + std::to_string(samples.rows()) + " < " +
                                std::to_string(w) + " samples)"});
      continue;
    }
    Trial t;
    t.subject_id = src.subject_id;
    t.activity_id = src.activity_id;
    t.trial_id = src.trial_id;
    t.samples = std::move(samples);
    t.sample_rate_hz = manifest.sample_rate_hz;
    ts.trials.push_back(std::move(t));
  }
  if (ts.trials.empty()) {
    throw DataError("no trials: every trial source of '" + manifest.name +
                    "' was shorter than one window");
  }

  std::set<int> labels;
  std::set<std::string> subjects;
  for (const auto& t : ts.trials) {
    labels.insert(t.activity_id);
    subjects.insert(t.subject_id);
  }
  ts.source_labels.assign(labels.begin(), labels.end());
  ts.subject_ids.assign(subjects.begin(), subjects.end());
  ts.class_count = static_cast<int>(ts.source_labels.size());

  std::map<int, int> remap;
  for (int k = 0; k < ts.class_count; ++k) remap[ts.source_labels[k]] = k;
  for (auto& t : ts.trials) t.activity_id = remap[t.activity_id];

  return ts;
}

struct ValidationReport {
  std::string dataset_name;
  int class_count = 0;
  std::vector<int> source_labels;
  std::map<int, std::size_t> trials_per_class;
  std::map<int, std::size_t> samples_per_class;
  std::map<std::string, std::size_t> trials_per_subject;
  std::map<std::string, std::size_t> samples_per_subject;
  std::size_t min_trial_length = 0;
  std::size_t max_trial_length = 0;
  std::size_t window_samples = 0;
  std::size_t skipped_trials = 0;
  std::vector<std::string> flags;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "harbench.validation_report";
    j["version"] = 1;
    j["dataset"] = dataset_name;
    j["class_count"] = class_count;
    j["source_labels"] = source_labels;
    auto classes = nlohmann::ordered_json::array();
    for (const auto& [k, n] : trials_per_class) {
      classes.push_back({{"class", k},
                         {"source_label", source_labels[static_cast<std::size_t>(k)]},
                         {"trials", n},
                         {"samples", samples_per_class.at(k)}});
    }
    j["classes"] = classes;
    auto subjects = nlohmann::ordered_json::array();
    for (const auto& [s, n] : trials_per_subject) {
      subjects.push_back({{"subject", s}, {"trials", n}, {"samples", samples_per_subject.at(s)}});
    }
    j["subjects"] = subjects;
    j["min_trial_length"] = min_trial_length;
    j["max_trial_length"] = max_trial_length;
    j["window_samples"] = window_samples;
    j["skipped_trials"] = skipped_trials;
    j["flags"] = flags;
    return j;
  }
};

/// Report-only sanity pass over a loaded TrialSet: per-class / per-subject
/// tallies, length range, plus flags for class imbalance and degenerate
/// subject counts.
inline ValidationReport validate_trialset(const TrialSet& ts) {
  ValidationReport r;
  r.dataset_name = ts.manifest.name;
  r.class_count = ts.class_count;
  r.source_labels = ts.source_labels;
  r.window_samples = ts.manifest.window_samples();
  r.skipped_trials = ts.skipped.size();

  for (int k = 0; k < ts.class_count; ++k) {
    r.trials_per_class[k] = 0;
    r.samples_per_class[k] = 0;
  }
  r.min_trial_length = std::numeric_limits<std::size_t>::max();
  for (const auto& t : ts.trials) {
    r.trials_per_class[t.activity_id] += 1;
    r.samples_per_class[t.activity_id] += t.length();
    r.trials_per_subject[t.subject_id] += 1;
    r.samples_per_subject[t.subject_id] += t.length();
    r.min_trial_length = std::min(r.min_trial_length, t.length());
    r.max_trial_length = std::max(r.max_trial_length, t.length());
  }

  // Imbalance flag: class sample mass under half (or over double) the median.
  std::vector<double> class_samples;
  for (const auto& [k, n] : r.samples_per_class) class_samples.push_back(static_cast<double>(n));
  std::vector<double> sorted = class_samples;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted.empty() ? 0.0
                        : (sorted.size() % 2 == 1
                               ? sorted[sorted.size() / 2]
                               : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]));
  for (int k = 0; k < ts.class_count; ++k) {
    const double n = static_cast<double>(r.samples_per_class[k]);
    if (median > 0.0 && (n < 0.5 * median || n > 2.0 * median)) {
      r.flags.push_back("class " + std::to_string(k) + " (source label " +
                        std::to_string(r.source_labels[static_cast<std::size_t>(k)]) +
                        ") is imbalanced: " + g17(n) + " samples vs median " + g17(median));
    }
  }
  if (r.trials_per_subject.size() < 2) {
    r.flags.push_back("leave-one-subject-out not applicable: single subject");
  }
  for (const auto& [k, n] : r.trials_per_class) {
    if (n < 2) {
      r.flags.push_back("class " + std::to_string(k) +
                        " has a single trial: leave-one-trial-out not applicable");
    }
  }
  return r;
}

}  // namespace harbench
