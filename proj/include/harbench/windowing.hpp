#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "harbench/dataset.hpp"
#include "harbench/error.hpp"
#include "harbench/rng.hpp"

namespace harbench {

/// A fixed-length slice of a trial. Holds a view into its parent trial, so
/// the TrialSet must outlive any WindowSet built from it.
struct Window {
  const Trial* trial = nullptr;
  std::size_t start = 0;
  std::size_t length = 0;

  const std::string& trial_id() const { return trial->trial_id; }
  const std::string& subject_id() const { return trial->subject_id; }
  int activity_id() const { return trial->activity_id; }
  std::size_t channels() const { return trial->channels(); }
  double sample(std::size_t t, std::size_t c) const { return trial->samples(start + t, c); }
};

struct WindowSet {
  std::vector<Window> windows;
  WindowingTechnique technique = WindowingTechnique::full_non_overlapping;
  std::size_t window_samples = 0;
};

struct FoldPlan {
  enum class Grouping { none, by_trial, by_subject };
  struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
  };
  std::vector<Fold> folds;
  Grouping grouping = Grouping::none;
};

inline const char* to_string(FoldPlan::Grouping g) {
  switch (g) {
    case FoldPlan::Grouping::none: return "none";
    case FoldPlan::Grouping::by_trial: return "by_trial";
    case FoldPlan::Grouping::by_subject: return "by_subject";
  }
  return "?";
}

/// Windows at starts 0, W, 2W, ...: floor(T/W) of them, trailing remainder
/// dropped. A trial shorter than one window yields an empty list.
inline std::vector<Window> window_full_non_overlapping(const Trial& trial, std::size_t w) {
  if (w < 2) throw ConfigError("windowing: window length must be >= 2");
  std::vector<Window> out;
  if (trial.length() < w) return out;
  const std::size_t count = trial.length() / w;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back({&trial, i * w, w});
  return out;
}

/// Windows at stride W/2: floor((T-W)/(W/2)) + 1 of them; consecutive windows
/// share exactly W/2 samples.
inline std::vector<Window> window_semi_overlapping(const Trial& trial, std::size_t w) {
  if (w < 2) throw ConfigError("windowing: window length must be >= 2");
  if (w % 2 != 0) throw ConfigError("windowing: semi-overlap requires even window length");
  std::vector<Window> out;
  if (trial.length() < w) return out;
  const std::size_t stride = w / 2;
  const std::size_t count = (trial.length() - w) / stride + 1;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back({&trial, i * stride, w});
  return out;
}

/// Windows for every trial of the set. Leave-one-trial-out uses 50%-overlap
/// windows inside each trial; the overlap never crosses a trial boundary, so
/// fold plans grouped by trial stay leakage-free.
inline WindowSet segment(const TrialSet& ts, WindowingTechnique technique, std::size_t w) {
  WindowSet ws;
  ws.technique = technique;
  ws.window_samples = w;
  for (const Trial& t : ts.trials) {
    std::vector<Window> windows = technique == WindowingTechnique::full_non_overlapping
                                      ? window_full_non_overlapping(t, w)
                                      : window_semi_overlapping(t, w);
    ws.windows.insert(ws.windows.end(), windows.begin(), windows.end());
  }
  return ws;
}

namespace detail {

/// Deals shuffled group indices class by class into k folds with one global
/// rotating cursor. Per class, fold shares differ by at most one; the global
/// cursor keeps overall fold sizes even when classes are small.
inline std::vector<std::size_t> stratified_fold_assignment(const std::vector<int>& group_class,
                                                           std::size_t k, Rng& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < group_class.size(); ++i) by_class[group_class[i]].push_back(i);

  std::vector<std::size_t> fold_of(group_class.size(), 0);
  std::size_t cursor = 0;
  for (auto& [cls, members] : by_class) {
    rng.shuffle(members);
    for (std::size_t m : members) {
      fold_of[m] = cursor % k;
      ++cursor;
    }
  }
  return fold_of;
}

}  // namespace detail

/// Semi-overlapping windows plus a by-trial fold plan: whole trials are dealt
/// into `folds` test groups (seeded shuffle, stratified by activity), so no
/// raw signal content can appear on both sides of a fold.
inline std::pair<WindowSet, FoldPlan> plan_loto_folds(const TrialSet& ts, std::size_t w,
                                                      std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("leave-one-trial-out: fold count must be >= 2");

  std::map<int, std::size_t> trials_per_class;
  for (const auto& t : ts.trials) trials_per_class[t.activity_id] += 1;
  for (const auto& [cls, n] : trials_per_class) {
    if (n < 2) {
      throw ConfigError("leave-one-trial-out: activity class " + std::to_string(cls) +
                        " has a single trial; need at least 2 per class");
    }
  }
  if (folds > ts.trials.size()) {
    throw ConfigError("leave-one-trial-out: " + std::to_string(folds) + " folds exceed " +
                      std::to_string(ts.trials.size()) + " trials");
  }

  WindowSet ws = segment(ts, WindowingTechnique::leave_one_trial_out, w);

  std::vector<int> trial_class(ts.trials.size());
  for (std::size_t i = 0; i < ts.trials.size(); ++i) trial_class[i] = ts.trials[i].activity_id;
  Rng rng(seed);
  const std::vector<std::size_t> fold_of_trial =
      detail::stratified_fold_assignment(trial_class, folds, rng);

  std::map<const Trial*, std::size_t> fold_of;
  for (std::size_t i = 0; i < ts.trials.size(); ++i) fold_of[&ts.trials[i]] = fold_of_trial[i];

  FoldPlan plan;
  plan.grouping = FoldPlan::Grouping::by_trial;
  plan.folds.resize(folds);
  for (std::size_t wi = 0; wi < ws.windows.size(); ++wi) {
    const std::size_t f = fold_of[ws.windows[wi].trial];
    for (std::size_t g = 0; g < folds; ++g) {
      (g == f ? plan.folds[g].test : plan.folds[g].train).push_back(wi);
    }
  }
  return {std::move(ws), std::move(plan)};
}

struct FoldAudit {
  bool index_disjoint = false;   // train and test window indices do not meet
  bool grouping_ok = false;      // no trial/subject on both sides (grouped plans)
  std::size_t raw_sample_overlap = 0;  // |(trial, sample) train coverage ∩ test coverage|
};

struct PlanAudit {
  std::vector<FoldAudit> folds;
  bool test_partition_ok = false;  // no window index in two test sets
  bool all_passed = false;
};

inline const char* audit_verdict(const FoldAudit& a, FoldPlan::Grouping g) {
  const bool leakage_checked = g != FoldPlan::Grouping::none;
  if (!a.index_disjoint || !a.grouping_ok) return "fail";
  if (leakage_checked) return a.raw_sample_overlap == 0 ? "pass" : "fail";
  return "not_enforced";  // ungrouped splits of overlapping windows share raw samples by design
}

/// Brute-force audit of a fold plan: per-fold index disjointness, the
/// grouping invariant, and the raw (trial, sample-index) coverage
/// intersection between train and test windows.
inline PlanAudit audit_fold_plan(const WindowSet& ws, const FoldPlan& plan) {
  PlanAudit audit;
  audit.test_partition_ok = true;

  std::vector<int> seen_in_test(ws.windows.size(), 0);
  for (const auto& fold : plan.folds) {
    for (std::size_t i : fold.test) {
      if (++seen_in_test[i] > 1) audit.test_partition_ok = false;
    }
  }

  audit.all_passed = audit.test_partition_ok;
  for (const auto& fold : plan.folds) {
    FoldAudit fa;

    std::vector<int> side(ws.windows.size(), 0);  // 1 = train, 2 = test
    fa.index_disjoint = true;
    for (std::size_t i : fold.train) side[i] = 1;
    for (std::size_t i : fold.test) {
      if (side[i] == 1) fa.index_disjoint = false;
      side[i] = 2;
    }

    std::map<const Trial*, std::pair<std::vector<bool>, std::vector<bool>>> coverage;
    std::map<const Trial*, int> trial_side;
    std::map<std::string, int> subject_side;
    auto mark = [&](std::size_t wi, bool is_test) {
      const Window& w = ws.windows[wi];
      auto& [train_cov, test_cov] = coverage[w.trial];
      auto& cov = is_test ? test_cov : train_cov;
      if (cov.size() < w.trial->length()) cov.resize(w.trial->length(), false);
      for (std::size_t t = w.start; t < w.start + w.length; ++t) cov[t] = true;
      const int bit = is_test ? 2 : 1;
      trial_side[w.trial] |= bit;
      subject_side[w.subject_id()] |= bit;
    };
    for (std::size_t i : fold.train) mark(i, false);
    for (std::size_t i : fold.test) mark(i, true);

    for (const auto& [trial, cov] : coverage) {
      const auto& [train_cov, test_cov] = cov;
      const std::size_t n = std::min(train_cov.size(), test_cov.size());
      for (std::size_t t = 0; t < n; ++t) {
        if (train_cov[t] && test_cov[t]) ++fa.raw_sample_overlap;
      }
    }

    fa.grouping_ok = true;
    if (plan.grouping == FoldPlan::Grouping::by_trial) {
      for (const auto& [trial, bits] : trial_side) {
        if (bits == 3) fa.grouping_ok = false;
      }
    } else if (plan.grouping == FoldPlan::Grouping::by_subject) {
      for (const auto& [subject, bits] : subject_side) {
        if (bits == 3) fa.grouping_ok = false;
      }
    }

    if (std::string(audit_verdict(fa, plan.grouping)) == "fail") audit.all_passed = false;
    audit.folds.push_back(std::move(fa));
  }
  return audit;
}

/// Provenance-only serialization (no sample data): enough to audit a run.
inline nlohmann::ordered_json windows_to_json(const WindowSet& ws, const FoldPlan* plan = nullptr) {
  nlohmann::ordered_json j;
  j["schema"] = "harbench.window_index";
  j["version"] = 1;
  j["technique"] = to_string(ws.technique);
  j["window_samples"] = ws.window_samples;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& w : ws.windows) {
    arr.push_back({{"trial_id", w.trial_id()},
                   {"subject_id", w.subject_id()},
                   {"activity_id", w.activity_id()},
                   {"start", w.start},
                   {"length", w.length}});
  }
  j["windows"] = arr;
  if (plan != nullptr) {
    nlohmann::ordered_json p;
    p["grouping"] = to_string(plan->grouping);
    auto folds = nlohmann::ordered_json::array();
    for (const auto& f : plan->folds) {
      folds.push_back({{"train", f.train}, {"test", f.test}});
    }
    p["folds"] = folds;
    j["fold_plan"] = p;
  }
  return j;
}

}  // namespace harbench
