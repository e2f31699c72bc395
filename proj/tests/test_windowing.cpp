#include <catch2/catch.hpp>

#include <map>
#include <set>
#include <vector>

#include "harbench/rng.hpp"
#include "harbench/synthetic.hpp"
#include "harbench/windowing.hpp"

using namespace harbench;

namespace {

Trial make_trial(std::size_t length, const std::string& id = "t0", int cls = 0,
                 const std::string& subject = "s0") {
  Trial t;
  t.subject_id = subject;
  t.activity_id = cls;
  t.trial_id = id;
  t.samples = Matrix(length, 1, 0.0);
  return t;
}

std::set<std::size_t> span_of(const Window& w) {
  std::set<std::size_t> s;
  for (std::size_t i = w.start; i < w.start + w.length; ++i) s.insert(i);
  return s;
}

std::size_t intersection_size(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  std::size_t n = 0;
  for (std::size_t x : a) n += b.count(x);
  return n;
}

}  // namespace

TEST_CASE("full-non-overlapping drops trailing remainder") {
  const Trial t = make_trial(10);
  const auto windows = window_full_non_overlapping(t, 4);
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].start == 0);
  CHECK(windows[1].start == 4);
  // samples 8 and 9 are covered by no window
  std::set<std::size_t> covered;
  for (const auto& w : windows) {
    for (std::size_t i : span_of(w)) covered.insert(i);
  }
  CHECK(covered.count(8) == 0);
  CHECK(covered.count(9) == 0);
}

TEST_CASE("full-non-overlapping partitions an exact multiple") {
  const Trial t = make_trial(8);
  const auto windows = window_full_non_overlapping(t, 4);
  REQUIRE(windows.size() == 2);
  const auto s0 = span_of(windows[0]);
  const auto s1 = span_of(windows[1]);
  CHECK(intersection_size(s0, s1) == 0);
  std::set<std::size_t> all = s0;
  all.insert(s1.begin(), s1.end());
  CHECK(all.size() == 8);
}

TEST_CASE("trial shorter than one window yields no windows") {
  const Trial t = make_trial(3);
  CHECK(window_full_non_overlapping(t, 4).empty());
  CHECK(window_semi_overlapping(t, 4).empty());
}

TEST_CASE("semi-overlapping start grid") {
  const Trial t = make_trial(10);
  const auto windows = window_semi_overlapping(t, 4);
  REQUIRE(windows.size() == 4);
  std::vector<std::size_t> starts;
  for (const auto& w : windows) starts.push_back(w.start);
  CHECK(starts == std::vector<std::size_t>{0, 2, 4, 6});
}

TEST_CASE("semi-overlapping on exactly one window") {
  const Trial t = make_trial(4);
  const auto semi = window_semi_overlapping(t, 4);
  const auto full = window_full_non_overlapping(t, 4);
  REQUIRE(semi.size() == 1);
  REQUIRE(full.size() == 1);
  CHECK(semi[0].start == full[0].start);
  CHECK(semi[0].length == full[0].length);
}

TEST_CASE("odd window length is rejected for semi-overlap") {
  const Trial t = make_trial(20);
  CHECK_THROWS_WITH(window_semi_overlapping(t, 5), Catch::Contains("even window length"));
}

TEST_CASE("window counts and overlaps over random trial lengths") {
  Rng rng(31);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t w = 2 * (1 + rng.below(24));  // even, 2..48
    const std::size_t t_len = w + rng.below(300);
    const Trial t = make_trial(t_len);

    const auto full = window_full_non_overlapping(t, w);
    const auto semi = window_semi_overlapping(t, w);

    CHECK(full.size() == t_len / w);
    CHECK(semi.size() == (t_len - w) / (w / 2) + 1);
    CHECK(semi.size() >= full.size());

    // brute-force: all full windows pairwise disjoint
    for (std::size_t i = 0; i < full.size(); ++i) {
      for (std::size_t j = i + 1; j < full.size(); ++j) {
        CHECK(intersection_size(span_of(full[i]), span_of(full[j])) == 0);
      }
    }
    // consecutive semi windows share exactly w/2 samples, skip-one none
    for (std::size_t i = 0; i + 1 < semi.size(); ++i) {
      CHECK(intersection_size(span_of(semi[i]), span_of(semi[i + 1])) == w / 2);
    }
    for (std::size_t i = 0; i + 2 < semi.size(); ++i) {
      CHECK(intersection_size(span_of(semi[i]), span_of(semi[i + 2])) == 0);
    }
  }
}

TEST_CASE("loto folds keep whole trials on one side") {
  SyntheticSpec spec;
  spec.classes = 1;
  spec.subjects = 2;
  spec.trials_per_subject_per_class = 2;  // 4 trials of one class
  const auto ts = make_synthetic_trialset(spec);

  const auto [ws, plan] = plan_loto_folds(ts, 40, 2, 5);
  REQUIRE(plan.folds.size() == 2);
  CHECK(plan.grouping == FoldPlan::Grouping::by_trial);

  for (const auto& fold : plan.folds) {
    std::set<std::string> test_trials, train_trials;
    for (std::size_t i : fold.test) test_trials.insert(ws.windows[i].trial_id());
    for (std::size_t i : fold.train) train_trials.insert(ws.windows[i].trial_id());
    CHECK(test_trials.size() == 2);  // two whole trials per test side
    for (const auto& id : test_trials) CHECK(train_trials.count(id) == 0);
  }
}

TEST_CASE("loto requires two trials per class") {
  SyntheticSpec spec;
  spec.classes = 2;
  spec.subjects = 1;
  spec.trials_per_subject_per_class = 1;
  const auto ts = make_synthetic_trialset(spec);
  CHECK_THROWS_WITH(plan_loto_folds(ts, 40, 2, 5), Catch::Contains("single trial"));
}

TEST_CASE("loto raw-sample coverage audit is clean on every fold") {
  Rng seeder(41);
  for (int rep = 0; rep < 20; ++rep) {
    SyntheticSpec spec;
    spec.classes = 2 + seeder.below(3);
    spec.subjects = 2 + seeder.below(3);
    spec.trials_per_subject_per_class = 1 + seeder.below(3);
    spec.trial_length = 60 + seeder.below(200);
    spec.seed = seeder.next();
    const auto ts = make_synthetic_trialset(spec);

    // guarantee >= 2 trials per class
    if (spec.subjects * spec.trials_per_subject_per_class < 2) continue;
    const std::size_t folds = 2 + seeder.below(3);
    if (folds > ts.trials.size()) continue;

    const auto [ws, plan] = plan_loto_folds(ts, 20, folds, seeder.next());

    // brute-force (trial_id, sample index) coverage audit
    for (const auto& fold : plan.folds) {
      std::map<std::string, std::set<std::size_t>> train_cov, test_cov;
      for (std::size_t i : fold.train) {
        const auto& w = ws.windows[i];
        for (std::size_t s = w.start; s < w.start + w.length; ++s) {
          train_cov[w.trial_id()].insert(s);
        }
      }
      for (std::size_t i : fold.test) {
        const auto& w = ws.windows[i];
        for (std::size_t s = w.start; s < w.start + w.length; ++s) {
          test_cov[w.trial_id()].insert(s);
        }
      }
      std::size_t overlap = 0;
      for (const auto& [id, cov] : train_cov) {
        auto it = test_cov.find(id);
        if (it == test_cov.end()) continue;
        overlap += intersection_size(cov, it->second);
      }
      CHECK(overlap == 0);
    }

    const auto audit = audit_fold_plan(ws, plan);
    CHECK(audit.all_passed);
    for (const auto& f : audit.folds) CHECK(f.raw_sample_overlap == 0);
  }
}

TEST_CASE("loto plan is deterministic in the seed") {
  SyntheticSpec spec;
  const auto ts = make_synthetic_trialset(spec);
  const auto [ws1, plan1] = plan_loto_folds(ts, 40, 4, 99);
  const auto [ws2, plan2] = plan_loto_folds(ts, 40, 4, 99);
  REQUIRE(plan1.folds.size() == plan2.folds.size());
  for (std::size_t f = 0; f < plan1.folds.size(); ++f) {
    CHECK(plan1.folds[f].train == plan2.folds[f].train);
    CHECK(plan1.folds[f].test == plan2.folds[f].test);
  }
}

TEST_CASE("audit flags a deliberately leaky plan") {
  SyntheticSpec spec;
  spec.classes = 1;
  spec.subjects = 1;
  spec.trials_per_subject_per_class = 2;
  const auto ts = make_synthetic_trialset(spec);
  const auto ws = segment(ts, WindowingTechnique::leave_one_trial_out, 40);

  FoldPlan leaky;
  leaky.grouping = FoldPlan::Grouping::by_trial;
  leaky.folds.resize(1);
  // first window of trial 0 trains, second window of trial 0 tests: same trial,
  // and with 50% overlap they share raw samples
  leaky.folds[0].train = {0};
  leaky.folds[0].test = {1};

  const auto audit = audit_fold_plan(ws, leaky);
  CHECK_FALSE(audit.all_passed);
  CHECK(audit.folds[0].raw_sample_overlap > 0);
  CHECK_FALSE(audit.folds[0].grouping_ok);
  CHECK(std::string(audit_verdict(audit.folds[0], leaky.grouping)) == "fail");
}

TEST_CASE("window index serialization carries provenance only") {
  SyntheticSpec spec;
  spec.subjects = 1;
  spec.trials_per_subject_per_class = 2;
  const auto ts = make_synthetic_trialset(spec);
  const auto [ws, plan] = plan_loto_folds(ts, 40, 2, 1);

  const auto j = windows_to_json(ws, &plan);
  CHECK(j.at("windows").size() == ws.windows.size());
  CHECK(j.at("fold_plan").at("folds").size() == 2);
  const auto& w0 = j.at("windows").at(0);
  CHECK(w0.contains("trial_id"));
  CHECK(w0.contains("start"));
  CHECK_FALSE(w0.contains("data"));
}
