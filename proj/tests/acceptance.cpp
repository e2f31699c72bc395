// Acceptance suite. Criteria 1-7 and 13 are self-contained; 8-12 need the
// public datasets prepared under $HARBENCH_DATA_DIR (or --data-dir) as
// <dataset>/manifest.json and are skipped when absent. One line per
// criterion; exit code 0 only if nothing failed.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "harbench/harbench.hpp"
#include "oracles.hpp"

using namespace harbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  enum class Status { pass, fail, skip } status;
  std::string detail;
};

Outcome pass(std::string detail = "") { return {Outcome::Status::pass, std::move(detail)}; }
Outcome fail(std::string detail) { return {Outcome::Status::fail, std::move(detail)}; }
Outcome skip(std::string detail) { return {Outcome::Status::skip, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- criterion 1: windowing algebra over 500 random (T, W) pairs ----------

Outcome windowing_algebra() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  for (int rep = 0; rep < 500; ++rep) {
    const std::size_t w = 2 * (1 + rng.below(40));  // even, 2..80
    const std::size_t t_len = w + rng.below(600);
    Trial trial;
    trial.trial_id = "t";
    trial.subject_id = "s";
    trial.samples = Matrix(t_len, 1, 0.0);

    const auto full = window_full_non_overlapping(trial, w);
    if (full.size() != t_len / w) return fail("full count wrong");
    for (std::size_t i = 0; i < full.size(); ++i) {
      for (std::size_t j = i + 1; j < full.size(); ++j) {
        const std::size_t a0 = full[i].start, a1 = a0 + full[i].length;
        const std::size_t b0 = full[j].start, b1 = b0 + full[j].length;
        if (a0 < b1 && b0 < a1) return fail("full windows overlap");
      }
    }

    const auto semi = window_semi_overlapping(trial, w);
    if (semi.size() != (t_len - w) / (w / 2) + 1) return fail("semi count wrong");
    for (std::size_t i = 0; i + 1 < semi.size(); ++i) {
      const std::size_t lo = std::max(semi[i].start, semi[i + 1].start);
      const std::size_t hi = std::min(semi[i].start + w, semi[i + 1].start + w);
      if (hi - lo != w / 2) return fail("consecutive semi overlap is not W/2");
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 5.0) return fail("took " + g17(dt) + " s (budget 5 s)");
  std::ostringstream os;
  os << "500 pairs in " << g17(dt) << " s";
  return pass(os.str());
}

// --- criterion 2: LOTO leakage audit on 100 random trial sets -------------

Outcome loto_leakage() {
  Rng rng(1002);
  for (int rep = 0; rep < 100; ++rep) {
    SyntheticSpec spec;
    spec.classes = 2 + rng.below(3);
    spec.subjects = 1 + rng.below(3);
    spec.trials_per_subject_per_class = 2 + rng.below(2);
    spec.trial_length = 50 + rng.below(250);
    spec.channels = 3;
    spec.window_seconds = 0.4;  // 20 samples
    spec.noise = 0.1;
    spec.seed = rng.next();
    const auto ts = make_synthetic_trialset(spec);

    const std::size_t folds = 2 + rng.below(3);
    const auto [ws, plan] = plan_loto_folds(ts, 20, folds, rng.next());

    for (const auto& fold : plan.folds) {
      std::set<std::pair<std::string, std::size_t>> train_cov, test_cov;
      for (std::size_t i : fold.train) {
        const auto& w = ws.windows[i];
        for (std::size_t s = w.start; s < w.start + w.length; ++s) {
          train_cov.emplace(w.trial_id(), s);
        }
      }
      for (std::size_t i : fold.test) {
        const auto& w = ws.windows[i];
        for (std::size_t s = w.start; s < w.start + w.length; ++s) {
          test_cov.emplace(w.trial_id(), s);
        }
      }
      for (const auto& key : test_cov) {
        if (train_cov.count(key) > 0) {
          return fail("raw-sample leakage between train and test in rep " + std::to_string(rep));
        }
      }
    }
  }
  return pass("100 synthetic trial sets, every fold disjoint at raw-sample level");
}

// --- criterion 3: feature oracle equivalence on 1000 random windows -------

Outcome feature_oracle() {
  Rng rng(1003);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rng.below(256);
    std::vector<double> s(n);
    for (double& x : s) x = rng.uniform(-8.0, 8.0);
    const auto f = channel_features(s);
    const double checks[11][2] = {
        {f[0], oracle::mean(s)},           {f[1], oracle::population_sd(s)},
        {f[2], oracle::aad(s)},            {f[3], oracle::maximum(s)},
        {f[4], oracle::minimum(s)},        {f[5], oracle::median(s)},
        {f[6], oracle::skew(s)},           {f[7], oracle::excess_kurtosis(s)},
        {f[8], oracle::iqr(s)},            {f[9], oracle::auc(s)},
        {f[10], oracle::sq_auc(s)},
    };
    for (const auto& [got, want] : checks) {
      worst = std::max(worst, oracle::rel_err(got, want));
    }
    // the 12th feature: ARA against its own oracle
    std::vector<double> y(n), z(n);
    for (double& v : y) v = rng.uniform(-8.0, 8.0);
    for (double& v : z) v = rng.uniform(-8.0, 8.0);
    worst = std::max(worst, oracle::rel_err(ara(s, y, z), oracle::ara(s, y, z)));
  }
  if (worst > 1e-9) return fail("worst relative error " + g17(worst));
  return pass("1000 windows, worst relative error " + g17(worst));
}

// --- criterion 4: gradient check against central finite differences -------

Outcome gradient_check() {
  Rng rng(1004);
  const double h = 1e-5;
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;

  for (int point = 0; point < 50; ++point) {
    MlpParams p = init_mlp(4, 3, 2000 + static_cast<std::uint64_t>(point));
    Matrix batch(2, 4);
    for (double& v : batch.data()) v = rng.uniform(-2.0, 2.0);
    const std::vector<int> labels = {static_cast<int>(rng.below(3)),
                                     static_cast<int>(rng.below(3))};

    const auto [loss, grads] = loss_and_grad(p, batch, labels);
    (void)loss;
    std::vector<double> analytic;
    std::vector<double*> ptrs;
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
      for (double v : grads.weights[l].data()) analytic.push_back(v);
      for (double v : grads.biases[l]) analytic.push_back(v);
      for (double& v : p.weights[l].data()) ptrs.push_back(&v);
      for (double& v : p.biases[l]) ptrs.push_back(&v);
    }

    auto signature = [&](const ForwardCache& cache) {
      std::vector<char> sig;
      for (std::size_t l = 0; l + 1 < cache.preacts.size(); ++l) {
        for (double z : cache.preacts[l].data()) sig.push_back(z > 0.0 ? 1 : 0);
      }
      return sig;
    };

    for (std::size_t i = 0; i < ptrs.size(); ++i) {
      const double saved = *ptrs[i];
      *ptrs[i] = saved + h;
      const auto up_cache = forward_cached(p, batch);
      const double up = loss_from_logits(up_cache.preacts.back(), labels);
      const auto sig_plus = signature(up_cache);
      *ptrs[i] = saved - h;
      const auto down_cache = forward_cached(p, batch);
      const double down = loss_from_logits(down_cache.preacts.back(), labels);
      const auto sig_minus = signature(down_cache);
      *ptrs[i] = saved;

      if (sig_plus != sig_minus) {
        ++skipped;  // FD straddles an activation kink; not a valid oracle there
        continue;
      }
      const double fd = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
      worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
      ++checked;
    }
  }

  if (worst > 1e-4) return fail("worst relative error " + g17(worst));
  if (skipped * 100 > checked) return fail("too many kink crossings: " + std::to_string(skipped));
  std::ostringstream os;
  os << "50 points, " << checked << " coordinates, worst rel err " << g17(worst) << ", "
     << skipped << " kink-crossing coordinates excluded";
  return pass(os.str());
}

// --- criterion 5: PCA contract ---------------------------------------------

Outcome pca_contract() {
  Rng rng(1005);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 120 + rng.below(100);
    const std::size_t d = 6 + rng.below(20);
    Matrix x(n, d);
    // correlated features so the spectrum is non-trivial
    for (std::size_t r = 0; r < n; ++r) {
      const double base = rng.normal();
      for (std::size_t c = 0; c < d; ++c) {
        x(r, c) = base * (1.0 + 0.3 * static_cast<double>(c % 4)) + 0.5 * rng.normal();
      }
    }
    const Scaler s = fit_scaler(x);
    const Matrix scaled = apply_scaler(s, x);
    const double threshold = 0.8 + 0.05 * static_cast<double>(rng.below(4));
    const PcaModel m = fit_pca(scaled, threshold);

    for (std::size_t a = 0; a < m.output_dim(); ++a) {
      for (std::size_t b = 0; b < m.output_dim(); ++b) {
        double dot = 0.0;
        for (std::size_t r = 0; r < m.input_dim(); ++r) dot += m.basis(r, a) * m.basis(r, b);
        if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-8) return fail("basis not orthonormal");
      }
    }

    const Matrix proj = apply_pca(m, scaled);
    const Matrix pcov = covariance(proj);
    for (std::size_t a = 0; a < m.output_dim(); ++a) {
      for (std::size_t b = 0; b < m.output_dim(); ++b) {
        const double want = a == b ? m.eigenvalues[a] : 0.0;
        if (std::abs(pcov(a, b) - want) > 1e-6) {
          return fail("projected covariance is not diag(eigenvalues)");
        }
      }
    }

    if (m.explained_ratio < threshold - 1e-9) return fail("retained variance below threshold");
  }
  return pass("orthonormality, projected covariance, and retained variance on 10 random sets");
}

// --- criterion 6: synthetic end-to-end under all three schemes ------------

Outcome synthetic_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  SyntheticSpec spec;  // 3 classes, 4 subjects, separable by construction
  const auto ts = make_synthetic_trialset(spec);

  std::ostringstream os;
  for (const auto scheme :
       {ValidationScheme::kfold, ValidationScheme::loso, ValidationScheme::holdout}) {
    ExperimentConfig cfg;
    cfg.manifest_path = "(synthetic)";
    cfg.technique = WindowingTechnique::semi_non_overlapping;
    cfg.scheme = scheme;
    cfg.k = 5;
    cfg.epochs_override = 40;
    const auto report = run_experiment_on(cfg, ts);
    os << to_string(scheme) << "=" << g17(report.mean_accuracy) << " ";
    if (report.mean_accuracy < 0.95) {
      return fail(std::string(to_string(scheme)) + " mean accuracy " +
                  g17(report.mean_accuracy) + " < 0.95");
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 120.0) return fail("took " + g17(dt) + " s (budget 120 s)");
  os << "in " << g17(dt) << " s";
  return pass(os.str());
}

// --- criterion 7: byte-identical reports ----------------------------------

Outcome determinism() {
  SyntheticSpec spec;
  const auto ts = make_synthetic_trialset(spec);
  for (const auto technique :
       {WindowingTechnique::semi_non_overlapping, WindowingTechnique::leave_one_trial_out}) {
    ExperimentConfig cfg;
    cfg.manifest_path = "(synthetic)";
    cfg.technique = technique;
    cfg.scheme = ValidationScheme::kfold;
    cfg.k = 4;
    cfg.epochs_override = 15;
    const auto a = run_experiment_on(cfg, ts);
    const auto b = run_experiment_on(cfg, ts);
    if (a.to_json().dump(2) != b.to_json().dump(2)) {
      return fail(std::string("report.json differs for ") + to_string(technique));
    }
    if (a.to_table() != b.to_table()) {
      return fail(std::string("report.txt differs for ") + to_string(technique));
    }
  }
  return pass("identical config + seeds give byte-identical reports (semi and loto)");
}

// --- criteria 8-12: public-dataset reproduction (gated on data) -----------

std::optional<fs::path> find_manifest(const fs::path& data_dir,
                                      const std::vector<std::string>& names) {
  if (data_dir.empty()) return std::nullopt;
  for (const auto& name : names) {
    const fs::path p = data_dir / name / "manifest.json";
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

Outcome dataset_run(const fs::path& manifest, WindowingTechnique technique,
                    ValidationScheme scheme, const std::string& variant, double min_accuracy,
                    double* out_accuracy = nullptr) {
  ExperimentConfig cfg;
  cfg.manifest_path = manifest.string();
  cfg.technique = technique;
  cfg.scheme = scheme;
  cfg.variant = variant;
  const auto report = run_experiment_on(cfg, load_trials(load_manifest(manifest)));
  if (out_accuracy != nullptr) *out_accuracy = report.mean_accuracy;
  std::ostringstream os;
  os << "mean accuracy " << 100.0 * report.mean_accuracy << "% (floor " << 100.0 * min_accuracy
     << "%)";
  if (report.mean_accuracy < min_accuracy) return fail(os.str());
  return pass(os.str());
}

Outcome reproduction(const fs::path& data_dir, const std::vector<std::string>& names,
                     WindowingTechnique technique, ValidationScheme scheme, double floor) {
  const auto manifest = find_manifest(data_dir, names);
  if (!manifest) return skip(names.front() + " not prepared under the data directory");
  return dataset_run(*manifest, technique, scheme, "V1", floor);
}

Outcome holdout_variants(const fs::path& data_dir) {
  const auto mhealth = find_manifest(data_dir, {"MHealth", "mhealth", "MHEALTH"});
  const auto uschad = find_manifest(data_dir, {"USCHAD", "uschad", "USC-HAD"});
  if (!mhealth || !uschad) return skip("MHealth and USCHAD not both prepared");

  std::ostringstream os;
  for (const auto& [name, manifest] : {std::pair{std::string("MHealth"), *mhealth},
                                       std::pair{std::string("USCHAD"), *uschad}}) {
    double v1 = 0.0, v2 = 0.0;
    auto r1 = dataset_run(manifest, WindowingTechnique::leave_one_trial_out,
                          ValidationScheme::holdout, "V1", 0.0, &v1);
    auto r2 = dataset_run(manifest, WindowingTechnique::leave_one_trial_out,
                          ValidationScheme::holdout, "V2", 0.0, &v2);
    if (r1.status == Outcome::Status::fail || r2.status == Outcome::Status::fail) {
      return fail(name + ": run failed");
    }
    if (std::abs(v1 - v2) > 0.03) {
      return fail(name + ": |V1 - V2| = " + g17(std::abs(v1 - v2)) + " > 0.03");
    }
    os << name << " V1=" << 100.0 * v1 << "% V2=" << 100.0 * v2 << "%  ";
  }
  return pass(os.str());
}

// --- criterion 13: per-window feature extraction time ----------------------

Outcome feature_timing() {
  // (window samples, channels, triplet groups) of the shipped manifests;
  // USCHAD has the longest window, MHealth the widest channel set.
  struct Shape { const char* name; std::size_t w, c, g; };
  const Shape shapes[] = {
      {"MHealth", 250, 23, 7}, {"USCHAD", 500, 6, 2},  {"UTD-1", 250, 6, 2},
      {"UTD-2", 250, 6, 2},    {"WHARF", 160, 3, 1},   {"WISDM", 200, 3, 1},
      {"OPPORTUNITY", 60, 30, 10},
  };

  Rng rng(1013);
  double slowest = 0.0;
  const char* slowest_name = "";
  for (const auto& shape : shapes) {
    DatasetManifest m;
    m.name = shape.name;
    m.sample_rate_hz = 50.0;
    m.window_seconds = static_cast<double>(shape.w) / 50.0;
    for (std::size_t c = 0; c < shape.c; ++c) m.channel_names.push_back("c" + std::to_string(c));
    for (std::size_t g = 0; g < shape.g; ++g) m.triplet_groups.push_back({3 * g, 3 * g + 1, 3 * g + 2});

    Trial t;
    t.trial_id = "timing";
    t.subject_id = "s";
    t.samples = Matrix(shape.w, shape.c);
    for (double& v : t.samples.data()) v = rng.uniform(-4.0, 4.0);
    const Window w{&t, 0, shape.w};

    extract_features(w, m);  // warm-up
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 3; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto f = extract_features(w, m);
      best = std::min(best, seconds_since(t0));
      if (f.size() != 11 * shape.c + shape.g) return fail("dimension mismatch");
    }
    if (best > slowest) {
      slowest = best;
      slowest_name = shape.name;
    }
  }
  std::ostringstream os;
  os << "slowest window shape " << slowest_name << " at " << g17(slowest)
     << " s per window (hardware-dependent; hard ceiling 0.05 s)";
  if (slowest > 0.05) return fail(os.str());
  return pass(os.str());
}

}  // namespace

int main(int argc, char** argv) {
  fs::path data_dir;
  if (const char* env = std::getenv("HARBENCH_DATA_DIR")) data_dir = env;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--data-dir" && i + 1 < argc) {
      data_dir = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else if (arg == "--help" || arg == "-h") {
      std::cout << "usage: harbench_acceptance [--data-dir DIR] [--only N]...\n";
      return 0;
    }
  }

  using Criterion = std::pair<std::string, std::function<Outcome()>>;
  const std::vector<Criterion> criteria = {
      {"windowing algebra on 500 random (T, W) pairs", windowing_algebra},
      {"leave-one-trial-out raw-sample leakage audit", loto_leakage},
      {"12-feature oracle equivalence on 1000 windows", feature_oracle},
      {"analytic gradient vs central finite differences", gradient_check},
      {"PCA orthonormality / spectrum / retained variance", pca_contract},
      {"synthetic 3-class end-to-end under kfold, loso, holdout", synthetic_end_to_end},
      {"byte-identical reports for identical config and seeds", determinism},
      {"MHealth semi-non-overlapping k-fold >= 98%",
       [&] {
         return reproduction(data_dir, {"MHealth", "mhealth", "MHEALTH"},
                             WindowingTechnique::semi_non_overlapping, ValidationScheme::kfold,
                             0.98);
       }},
      {"USCHAD semi-non-overlapping k-fold >= 90%",
       [&] {
         return reproduction(data_dir, {"USCHAD", "uschad", "USC-HAD"},
                             WindowingTechnique::semi_non_overlapping, ValidationScheme::kfold,
                             0.90);
       }},
      {"MHealth semi-non-overlapping leave-one-subject-out >= 93%",
       [&] {
         return reproduction(data_dir, {"MHealth", "mhealth", "MHEALTH"},
                             WindowingTechnique::semi_non_overlapping, ValidationScheme::loso,
                             0.93);
       }},
      {"UTD-1 semi-non-overlapping k-fold >= 65%",
       [&] {
         return reproduction(data_dir, {"UTD-1", "utd-1", "utd1", "UTD1"},
                             WindowingTechnique::semi_non_overlapping, ValidationScheme::kfold,
                             0.65);
       }},
      {"hold-out V1 vs V2 within 3 points on MHealth and USCHAD",
       [&] { return holdout_variants(data_dir); }},
      {"per-window feature extraction under the 0.05 s ceiling", feature_timing},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && only.count(id) == 0) continue;
    Outcome outcome = fail("unhandled");
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.status == Outcome::Status::pass   ? "PASS"
                      : outcome.status == Outcome::Status::skip ? "SKIP"
                                                                : "FAIL";
    std::cout << "[" << tag << "] criterion " << id << ": " << criteria[i].first;
    if (!outcome.detail.empty()) std::cout << " -- " << outcome.detail;
    std::cout << std::endl;
    if (outcome.status == Outcome::Status::fail) ++failures;
  }

  if (failures > 0) {
    std::cout << failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  return 0;
}
