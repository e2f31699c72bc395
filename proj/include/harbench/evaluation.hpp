#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "harbench/dataset.hpp"
#include "harbench/error.hpp"
#include "harbench/features.hpp"
#include "harbench/model.hpp"
#include "harbench/pipeline.hpp"
#include "harbench/preprocess.hpp"
#include "harbench/rng.hpp"
#include "harbench/windowing.hpp"

namespace harbench {

enum class ValidationScheme { kfold, loso, holdout };

inline const char* to_string(ValidationScheme s) {
  switch (s) {
    case ValidationScheme::kfold: return "kfold";
    case ValidationScheme::loso: return "loso";
    case ValidationScheme::holdout: return "holdout";
  }
  return "?";
}

inline std::optional<ValidationScheme> scheme_from_string(std::string_view s) {
  const std::string n = normalized_name(s);
  if (n == "kfold" || n == "kfolds") return ValidationScheme::kfold;
  if (n == "loso" || n == "leaveonesubjectout") return ValidationScheme::loso;
  if (n == "holdout") return ValidationScheme::holdout;
  return std::nullopt;
}

struct SeedSet {
  std::uint64_t init = 1;     // network initialization (+ fold index)
  std::uint64_t shuffle = 2;  // minibatch shuffling (+ fold index)
  std::uint64_t split = 3;    // fold assignment
};

struct ModelHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double leaky_slope = 0.01;
  std::size_t batch_size = 16;
};

struct ExperimentConfig {
  std::string manifest_path;
  WindowingTechnique technique = WindowingTechnique::semi_non_overlapping;
  ValidationScheme scheme = ValidationScheme::kfold;
  std::size_t k = 10;
  double holdout_test_fraction = 0.3;
  std::string variant = "V1";  // V1 trains 250 epochs, V2 trains 200
  std::optional<std::size_t> epochs_override;
  double pca_retained_variance = 0.95;
  SeedSet seeds;
  ModelHyper model;
  std::string out_dir = "harbench-out";
  std::size_t jobs = 1;
  int verbosity = 1;
  bool save_models = false;
  bool write_window_index = true;

  std::size_t epochs() const {
    if (epochs_override) return *epochs_override;
    return variant == "V2" ? 200 : 250;
  }

  void validate() const {
    if (variant != "V1" && variant != "V2") {
      throw ConfigError("config: variant must be V1 or V2, got '" + variant + "'");
    }
    if (scheme == ValidationScheme::kfold && k < 2) {
      throw ConfigError("config: k must be >= 2 for k-fold validation");
    }
    if (scheme == ValidationScheme::holdout &&
        !(holdout_test_fraction > 0.0 && holdout_test_fraction < 1.0)) {
      throw ConfigError("config: holdout_test_fraction must be in (0, 1)");
    }
    if (!(pca_retained_variance > 0.0) || pca_retained_variance > 1.0) {
      throw ConfigError("config: pca_retained_variance must be in (0, 1]");
    }
    if (epochs_override && *epochs_override < 1) {
      throw ConfigError("config: epochs must be >= 1");
    }
    if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  }
};

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["manifest"] = c.manifest_path;
  j["technique"] = to_string(c.technique);
  j["scheme"] = to_string(c.scheme);
  j["k"] = c.k;
  j["holdout_test_fraction"] = c.holdout_test_fraction;
  j["variant"] = c.variant;
  j["epochs"] = c.epochs();
  j["pca_retained_variance"] = c.pca_retained_variance;
  j["seeds"] = {{"init", c.seeds.init}, {"shuffle", c.seeds.shuffle}, {"split", c.seeds.split}};
  j["model"] = {{"learning_rate", c.model.learning_rate}, {"beta1", c.model.beta1},
                {"beta2", c.model.beta2},                 {"epsilon", c.model.epsilon},
                {"leaky_relu_slope", c.model.leaky_slope}, {"batch_size", c.model.batch_size}};
  j["out_dir"] = c.out_dir;
  j["jobs"] = c.jobs;
  j["save_models"] = c.save_models;
  j["write_window_index"] = c.write_window_index;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  try {
    c.manifest_path = j.at("manifest").get<std::string>();
    if (!base_dir.empty() && !std::filesystem::path(c.manifest_path).is_absolute() &&
        !std::filesystem::exists(c.manifest_path)) {
      const auto candidate = base_dir / c.manifest_path;
      if (std::filesystem::exists(candidate)) c.manifest_path = candidate.string();
    }
    const auto tech = windowing_from_string(j.at("technique").get<std::string>());
    if (!tech) throw ConfigError("config: unknown technique '" + j.at("technique").dump() + "'");
    c.technique = *tech;
    const auto scheme = scheme_from_string(j.at("scheme").get<std::string>());
    if (!scheme) throw ConfigError("config: unknown scheme '" + j.at("scheme").dump() + "'");
    c.scheme = *scheme;
    c.k = j.value("k", c.k);
    c.holdout_test_fraction = j.value("holdout_test_fraction", c.holdout_test_fraction);
    c.variant = j.value("variant", c.variant);
    if (j.contains("epochs")) c.epochs_override = j.at("epochs").get<std::size_t>();
    c.pca_retained_variance = j.value("pca_retained_variance", c.pca_retained_variance);
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      c.seeds.init = s.value("init", c.seeds.init);
      c.seeds.shuffle = s.value("shuffle", c.seeds.shuffle);
      c.seeds.split = s.value("split", c.seeds.split);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.learning_rate = m.value("learning_rate", c.model.learning_rate);
      c.model.beta1 = m.value("beta1", c.model.beta1);
      c.model.beta2 = m.value("beta2", c.model.beta2);
      c.model.epsilon = m.value("epsilon", c.model.epsilon);
      c.model.leaky_slope = m.value("leaky_relu_slope", c.model.leaky_slope);
      c.model.batch_size = m.value("batch_size", c.model.batch_size);
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    c.jobs = j.value("jobs", c.jobs);
    c.verbosity = j.value("verbosity", c.verbosity);
    c.save_models = j.value("save_models", c.save_models);
    c.write_window_index = j.value("write_window_index", c.write_window_index);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config parse error in " + path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Splits

namespace detail {

/// Groups window indices by the grouping key; key order is first appearance.
struct GroupIndex {
  std::vector<std::vector<std::size_t>> members;  // group -> window indices
  std::vector<int> group_class;                   // class label, or -1 if mixed
};

inline GroupIndex build_groups(const WindowSet& ws, FoldPlan::Grouping grouping) {
  GroupIndex gi;
  std::map<std::string, std::size_t> id_of;
  for (std::size_t i = 0; i < ws.windows.size(); ++i) {
    const Window& w = ws.windows[i];
    std::string key;
    switch (grouping) {
      case FoldPlan::Grouping::none: key = std::to_string(i); break;
      case FoldPlan::Grouping::by_trial: key = w.trial_id(); break;
      case FoldPlan::Grouping::by_subject: key = w.subject_id(); break;
    }
    auto [it, inserted] = id_of.try_emplace(key, gi.members.size());
    if (inserted) {
      gi.members.emplace_back();
      gi.group_class.push_back(w.activity_id());
    }
    gi.members[it->second].push_back(i);
    if (gi.group_class[it->second] != w.activity_id()) gi.group_class[it->second] = -1;
  }
  return gi;
}

inline FoldPlan plan_from_assignment(const GroupIndex& gi, const std::vector<std::size_t>& fold_of,
                                     std::size_t folds, FoldPlan::Grouping grouping) {
  FoldPlan plan;
  plan.grouping = grouping;
  plan.folds.resize(folds);
  for (std::size_t g = 0; g < gi.members.size(); ++g) {
    for (std::size_t f = 0; f < folds; ++f) {
      auto& side = f == fold_of[g] ? plan.folds[f].test : plan.folds[f].train;
      side.insert(side.end(), gi.members[g].begin(), gi.members[g].end());
    }
  }
  for (auto& f : plan.folds) {
    std::sort(f.train.begin(), f.train.end());
    std::sort(f.test.begin(), f.test.end());
  }
  return plan;
}

}  // namespace detail

/// k folds over windows (grouping none), whole trials (by_trial, the
/// leave-one-trial-out fold rule), or whole subjects (by_subject). Seeded,
/// stratified by class where the group has a single class.
inline FoldPlan kfold_splits(const WindowSet& ws, std::size_t k, std::uint64_t seed,
                             FoldPlan::Grouping grouping = FoldPlan::Grouping::none) {
  if (k < 2) throw ConfigError("kfold: k must be >= 2");
  const detail::GroupIndex gi = detail::build_groups(ws, grouping);
  if (k > gi.members.size()) {
    throw ConfigError("kfold: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(gi.members.size()) + " groups under grouping " +
                      to_string(grouping));
  }
  Rng rng(seed);
  const auto fold_of = detail::stratified_fold_assignment(gi.group_class, k, rng);
  return detail::plan_from_assignment(gi, fold_of, k, grouping);
}

/// One fold per subject: fold s tests every window of subject s.
inline FoldPlan loso_splits(const WindowSet& ws) {
  std::map<std::string, std::size_t> subject_fold;  // sorted subject order
  for (const auto& w : ws.windows) subject_fold.try_emplace(w.subject_id(), 0);
  if (subject_fold.size() < 2) {
    throw ConfigError("leave-one-subject-out: need at least 2 subjects, got " +
                      std::to_string(subject_fold.size()));
  }
  std::size_t next = 0;
  for (auto& [subject, fold] : subject_fold) fold = next++;

  FoldPlan plan;
  plan.grouping = FoldPlan::Grouping::by_subject;
  plan.folds.resize(subject_fold.size());
  for (std::size_t i = 0; i < ws.windows.size(); ++i) {
    const std::size_t f = subject_fold[ws.windows[i].subject_id()];
    for (std::size_t g = 0; g < plan.folds.size(); ++g) {
      (g == f ? plan.folds[g].test : plan.folds[g].train).push_back(i);
    }
  }
  return plan;
}

/// Single stratified split; per class (or group), round(fraction * n) goes to
/// the test side, capped so at least one member stays in training.
inline FoldPlan holdout_split(const WindowSet& ws, double test_fraction, std::uint64_t seed,
                              FoldPlan::Grouping grouping = FoldPlan::Grouping::none) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("holdout: test fraction must be in (0, 1)");
  }
  const detail::GroupIndex gi = detail::build_groups(ws, grouping);
  const std::size_t groups = gi.members.size();

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t g = 0; g < groups; ++g) by_class[gi.group_class[g]].push_back(g);

  Rng rng(seed);
  std::vector<std::size_t> fold_of(groups, 0);  // 0 = train side, fold index below picks test
  for (auto& [cls, members] : by_class) {
    rng.shuffle(members);
    auto take = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    if (take >= members.size()) take = members.size() - 1;
    for (std::size_t i = 0; i < take; ++i) fold_of[members[i]] = 1;
  }

  FoldPlan plan;
  plan.grouping = grouping;
  plan.folds.resize(1);
  for (std::size_t g = 0; g < groups; ++g) {
    auto& side = fold_of[g] == 1 ? plan.folds[0].test : plan.folds[0].train;
    side.insert(side.end(), gi.members[g].begin(), gi.members[g].end());
  }
  std::sort(plan.folds[0].train.begin(), plan.folds[0].train.end());
  std::sort(plan.folds[0].test.begin(), plan.folds[0].test.end());
  if (plan.folds[0].test.empty() || plan.folds[0].train.empty()) {
    throw ConfigError("holdout: split left one side empty");
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Metrics

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;   // true instances of the class
  bool zero_support = false;
};

struct MetricsSummary {
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
};

/// Standard per-class precision/recall/F1 from a K x K confusion matrix
/// (rows = true class, columns = predicted). Empty denominators yield 0;
/// zero-support classes are flagged.
inline MetricsSummary metrics(const std::vector<std::vector<long long>>& confusion) {
  const std::size_t k = confusion.size();
  MetricsSummary out;
  long long total = 0;
  long long diagonal = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (confusion[i].size() != k) throw ConfigError("metrics: confusion matrix must be square");
    for (std::size_t j = 0; j < k; ++j) {
      if (confusion[i][j] < 0) throw ConfigError("metrics: negative count");
      total += confusion[i][j];
    }
    diagonal += confusion[i][i];
  }
  out.accuracy = total > 0 ? static_cast<double>(diagonal) / static_cast<double>(total) : 0.0;

  out.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    long long tp = confusion[c][c];
    long long support = 0;
    long long predicted = 0;
    for (std::size_t j = 0; j < k; ++j) {
      support += confusion[c][j];
      predicted += confusion[j][c];
    }
    ClassMetrics& m = out.per_class[c];
    m.support = support;
    m.zero_support = support == 0;
    m.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = support > 0 ? static_cast<double>(tp) / static_cast<double>(support) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment driver

struct FoldResult {
  std::size_t index = 0;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  std::size_t pca_dim = 0;
  double accuracy = 0.0;
  std::string audit = "pass";
  bool valid = true;
  std::vector<std::vector<long long>> confusion;
  double train_seconds = 0.0;
  std::optional<PipelineModel> pipeline;  // populated when config.save_models
};

struct TimingStats {
  double min_s = 0.0;
  double mean_s = 0.0;
  double max_s = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  nlohmann::ordered_json config_echo;
  std::string dataset_name;
  int class_count = 0;
  std::vector<int> source_labels;
  std::size_t subject_count = 0;
  std::size_t trial_count = 0;
  std::size_t skipped_trials = 0;
  std::size_t window_samples = 0;
  std::size_t window_count = 0;
  std::size_t feature_dim = 0;
  std::string grouping;
  std::vector<FoldResult> folds;
  std::size_t valid_folds = 0;
  double mean_accuracy = 0.0;
  MetricsSummary overall;
  std::vector<std::vector<long long>> confusion;  // summed over valid folds
  bool all_folds_valid = true;

  // Run-varying measurements; serialized separately so the report proper is
  // byte-identical across reruns of the same config.
  TimingStats feature_timing;
  std::vector<double> fold_train_seconds;
  double total_seconds = 0.0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "harbench.eval_report";
    j["version"] = 1;
    j["config"] = config_echo;
    j["dataset"] = {{"name", dataset_name},
                    {"classes", class_count},
                    {"source_labels", source_labels},
                    {"subjects", subject_count},
                    {"trials", trial_count},
                    {"skipped_trials", skipped_trials}};
    j["windowing"] = {{"window_samples", window_samples},
                      {"windows", window_count},
                      {"feature_dim", feature_dim},
                      {"grouping", grouping}};
    auto folds_json = nlohmann::ordered_json::array();
    for (const auto& f : folds) {
      folds_json.push_back({{"index", f.index},
                            {"train_windows", f.train_windows},
                            {"test_windows", f.test_windows},
                            {"pca_dim", f.pca_dim},
                            {"accuracy", f.accuracy},
                            {"leakage_audit", f.audit},
                            {"valid", f.valid}});
    }
    j["folds"] = folds_json;
    j["valid_folds"] = valid_folds;
    j["mean_accuracy"] = mean_accuracy;
    auto per_class = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < overall.per_class.size(); ++c) {
      const auto& m = overall.per_class[c];
      per_class.push_back({{"class", c},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support},
                           {"zero_support", m.zero_support}});
    }
    j["per_class"] = per_class;
    j["confusion"] = confusion;
    j["all_folds_valid"] = all_folds_valid;
    return j;
  }

  nlohmann::ordered_json timing_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "harbench.timing";
    j["version"] = 1;
    j["feature_extraction_seconds"] = {{"min", feature_timing.min_s},
                                       {"mean", feature_timing.mean_s},
                                       {"max", feature_timing.max_s},
                                       {"windows", feature_timing.count}};
    j["fold_train_seconds"] = fold_train_seconds;
    j["total_seconds"] = total_seconds;
    return j;
  }

  /// One row per fold plus the mean row, fixed-width.
  std::string to_table() const {
    std::ostringstream os;
    os << "dataset: " << dataset_name << "  technique: "
       << config_echo.value("technique", std::string("?"))
       << "  scheme: " << config_echo.value("scheme", std::string("?")) << "  variant: "
       << config_echo.value("variant", std::string("?")) << "\n";
    os << std::left << std::setw(6) << "fold" << std::right << std::setw(10) << "train"
       << std::setw(10) << "test" << std::setw(12) << "accuracy" << std::setw(15) << "audit"
       << "\n";
    for (const auto& f : folds) {
      os << std::left << std::setw(6) << f.index << std::right << std::setw(10)
         << f.train_windows << std::setw(10) << f.test_windows << std::setw(12) << std::fixed
         << std::setprecision(4) << f.accuracy << std::setw(15) << f.audit << "\n";
    }
    os << "mean accuracy over " << valid_folds << " valid fold"
       << (valid_folds == 1 ? "" : "s") << ": " << std::fixed << std::setprecision(4)
       << mean_accuracy << "\n";
    return os.str();
  }
};

namespace detail {

inline Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double* src = x.row(idx[r]);
    std::copy(src, src + x.cols(), out.row(r));
  }
  return out;
}

}  // namespace detail

/// Runs the configured experiment on an already-loaded TrialSet. Per fold:
/// fit scaler and PCA on the training side only, train the network, score
/// the test side. Folds with a failed leakage audit are kept in the report
/// but excluded from the mean.
inline EvalReport run_experiment_on(const ExperimentConfig& cfg, const TrialSet& ts) {
  cfg.validate();
  const auto t_run0 = std::chrono::steady_clock::now();

  const DatasetManifest& manifest = ts.manifest;
  if (!manifest.supports(cfg.technique)) {
    std::string supported;
    for (auto t : manifest.supported_windowing) {
      if (!supported.empty()) supported += ", ";
      supported += to_string(t);
    }
    throw ConfigError("dataset '" + manifest.name + "' does not support technique '" +
                      to_string(cfg.technique) + "' (supported: " + supported + ")");
  }
  const std::size_t w = manifest.window_samples();

  WindowSet ws;
  FoldPlan plan;
  if (cfg.technique == WindowingTechnique::leave_one_trial_out) {
    switch (cfg.scheme) {
      case ValidationScheme::kfold: {
        auto [set, p] = plan_loto_folds(ts, w, cfg.k, cfg.seeds.split);
        ws = std::move(set);
        plan = std::move(p);
        break;
      }
      case ValidationScheme::loso:
        ws = segment(ts, cfg.technique, w);
        plan = loso_splits(ws);
        break;
      case ValidationScheme::holdout:
        ws = segment(ts, cfg.technique, w);
        plan = holdout_split(ws, cfg.holdout_test_fraction, cfg.seeds.split,
                             FoldPlan::Grouping::by_trial);
        break;
    }
  } else {
    ws = segment(ts, cfg.technique, w);
    switch (cfg.scheme) {
      case ValidationScheme::kfold:
        plan = kfold_splits(ws, cfg.k, cfg.seeds.split, FoldPlan::Grouping::none);
        break;
      case ValidationScheme::loso:
        plan = loso_splits(ws);
        break;
      case ValidationScheme::holdout:
        plan = holdout_split(ws, cfg.holdout_test_fraction, cfg.seeds.split,
                             FoldPlan::Grouping::none);
        break;
    }
  }
  if (ws.windows.empty()) {
    throw DataError("no windows: every trial of '" + manifest.name +
                    "' is shorter than one window");
  }

  const FeatureLayout layout = feature_layout(manifest);
  const std::size_t n = ws.windows.size();
  Matrix features(n, layout.dim());
  std::vector<int> labels(n);
  TimingStats timing;
  timing.min_s = std::numeric_limits<double>::infinity();
  double timing_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> f = extract_features(ws.windows[i], manifest);
    const auto t1 = std::chrono::steady_clock::now();
    const double dt = std::chrono::duration<double>(t1 - t0).count();
    timing.min_s = std::min(timing.min_s, dt);
    timing.max_s = std::max(timing.max_s, dt);
    timing_sum += dt;
    std::copy(f.begin(), f.end(), features.row(i));
    labels[i] = ws.windows[i].activity_id();
  }
  timing.count = n;
  timing.mean_s = timing_sum / static_cast<double>(n);

  const PlanAudit audit = audit_fold_plan(ws, plan);

  std::vector<FoldResult> results(plan.folds.size());
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::atomic<std::size_t> next_fold{0};

  auto run_fold = [&](std::size_t fi) {
    const auto t0 = std::chrono::steady_clock::now();
    const FoldPlan::Fold& fold = plan.folds[fi];
    FoldResult& r = results[fi];
    r.index = fi;
    r.train_windows = fold.train.size();
    r.test_windows = fold.test.size();
    r.audit = audit_verdict(audit.folds[fi], plan.grouping);
    r.valid = r.audit != "fail";

    if (fold.test.empty() || fold.train.empty()) {
      throw std::runtime_error("fold " + std::to_string(fi) + ": empty " +
                               (fold.test.empty() ? "test" : "train") + " side");
    }
    const std::size_t k_classes = static_cast<std::size_t>(ts.class_count);
    std::vector<bool> seen(k_classes, false);
    for (std::size_t i : fold.train) seen[static_cast<std::size_t>(labels[i])] = true;
    for (std::size_t c = 0; c < k_classes; ++c) {
      if (!seen[c]) {
        throw std::runtime_error("fold " + std::to_string(fi) + ": class " + std::to_string(c) +
                                 " absent from the training split; cannot train");
      }
    }

    const Matrix train_raw = detail::gather_rows(features, fold.train);
    const Matrix test_raw = detail::gather_rows(features, fold.test);

    const Scaler scaler = fit_scaler(train_raw);
    const Matrix train_scaled = apply_scaler(scaler, train_raw);
    const Matrix test_scaled = apply_scaler(scaler, test_raw);

    const PcaModel pca = fit_pca(train_scaled, cfg.pca_retained_variance);
    const Matrix train_proj = apply_pca(pca, train_scaled);
    const Matrix test_proj = apply_pca(pca, test_scaled);
    r.pca_dim = pca.output_dim();

    std::vector<int> train_labels(fold.train.size());
    for (std::size_t i = 0; i < fold.train.size(); ++i) train_labels[i] = labels[fold.train[i]];

    MlpParams init = init_mlp(pca.output_dim(), k_classes, cfg.seeds.init + fi,
                              cfg.model.leaky_slope);
    TrainConfig tc;
    tc.batch_size = cfg.model.batch_size;
    tc.epochs = cfg.epochs();
    tc.learning_rate = cfg.model.learning_rate;
    tc.beta1 = cfg.model.beta1;
    tc.beta2 = cfg.model.beta2;
    tc.epsilon = cfg.model.epsilon;
    tc.shuffle_seed = cfg.seeds.shuffle + fi;
    auto [trained, history] = train(std::move(init), train_proj, train_labels, tc);

    r.confusion.assign(k_classes, std::vector<long long>(k_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < fold.test.size(); ++i) {
      const double* row = test_proj.row(i);
      const int truth = labels[fold.test[i]];
      const int guess = predict(trained, std::span<const double>(row, test_proj.cols()));
      r.confusion[static_cast<std::size_t>(truth)][static_cast<std::size_t>(guess)] += 1;
      if (guess == truth) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(fold.test.size());

    if (cfg.save_models) {
      r.pipeline = PipelineModel{layout, scaler, pca, std::move(trained)};
    }
    r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  auto worker = [&] {
    for (;;) {
      const std::size_t fi = next_fold.fetch_add(1);
      if (fi >= plan.folds.size()) return;
      try {
        run_fold(fi);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(cfg.jobs, plan.folds.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  EvalReport report;
  report.config_echo = config_to_json(cfg);
  report.dataset_name = manifest.name;
  report.class_count = ts.class_count;
  report.source_labels = ts.source_labels;
  report.subject_count = ts.subject_ids.size();
  report.trial_count = ts.trials.size();
  report.skipped_trials = ts.skipped.size();
  report.window_samples = w;
  report.window_count = n;
  report.feature_dim = layout.dim();
  report.grouping = to_string(plan.grouping);
  report.feature_timing = timing;

  const std::size_t k_classes = static_cast<std::size_t>(ts.class_count);
  report.confusion.assign(k_classes, std::vector<long long>(k_classes, 0));
  double accuracy_sum = 0.0;
  for (auto& r : results) {
    if (r.valid) {
      ++report.valid_folds;
      accuracy_sum += r.accuracy;
      for (std::size_t i = 0; i < k_classes; ++i) {
        for (std::size_t j = 0; j < k_classes; ++j) report.confusion[i][j] += r.confusion[i][j];
      }
    } else {
      report.all_folds_valid = false;
    }
    report.fold_train_seconds.push_back(r.train_seconds);
    report.folds.push_back(std::move(r));
  }
  if (report.valid_folds == 0) {
    throw std::runtime_error("no valid folds: every fold failed its leakage audit");
  }
  report.mean_accuracy = accuracy_sum / static_cast<double>(report.valid_folds);
  report.overall = metrics(report.confusion);
  report.total_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_run0).count();
  return report;
}

/// Loads the dataset named by the config, runs the experiment, and writes
/// report.json / report.txt / timing.json (plus the window index and fold
/// models when enabled) into config.out_dir.
inline EvalReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const DatasetManifest manifest = load_manifest(cfg.manifest_path);
  const TrialSet ts = load_trials(manifest);
  EvalReport report = run_experiment_on(cfg, ts);

  namespace fs = std::filesystem;
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  {
    std::ofstream f(out / "report.json");
    if (!f) throw DataError("cannot write " + (out / "report.json").string());
    f << report.to_json().dump(2) << '\n';
  }
  {
    std::ofstream f(out / "report.txt");
    f << report.to_table();
  }
  {
    std::ofstream f(out / "timing.json");
    f << report.timing_json().dump(2) << '\n';
  }
  if (cfg.write_window_index) {
    // Regenerate the deterministic window/fold structure for the audit file.
    const std::size_t w = manifest.window_samples();
    WindowSet ws;
    FoldPlan plan;
    if (cfg.technique == WindowingTechnique::leave_one_trial_out &&
        cfg.scheme == ValidationScheme::kfold) {
      auto [set, p] = plan_loto_folds(ts, w, cfg.k, cfg.seeds.split);
      ws = std::move(set);
      plan = std::move(p);
    } else {
      ws = segment(ts, cfg.technique, w);
      switch (cfg.scheme) {
        case ValidationScheme::kfold:
          plan = kfold_splits(ws, cfg.k, cfg.seeds.split, FoldPlan::Grouping::none);
          break;
        case ValidationScheme::loso:
          plan = loso_splits(ws);
          break;
        case ValidationScheme::holdout:
          plan = holdout_split(ws, cfg.holdout_test_fraction, cfg.seeds.split,
                               cfg.technique == WindowingTechnique::leave_one_trial_out
                                   ? FoldPlan::Grouping::by_trial
                                   : FoldPlan::Grouping::none);
          break;
      }
    }
    std::ofstream f(out / "windows.json");
    f << windows_to_json(ws, &plan).dump(2) << '\n';
  }
  if (cfg.save_models) {
    for (const auto& fold : report.folds) {
      if (fold.pipeline) {
        save_pipeline(out / ("fold_" + std::to_string(fold.index) + "_model.json"),
                      *fold.pipeline);
      }
    }
  }
  return report;
}

}  // namespace harbench
