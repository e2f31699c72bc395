#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "harbench/dataset.hpp"
#include "harbench/rng.hpp"
#include "harbench/text.hpp"

namespace harbench {

/// Parameters of a generated multi-subject, multi-class sinusoid dataset.
/// Classes differ in offset, amplitude and frequency, so the handcrafted
/// features separate them cleanly; subjects carry a small additive bias.
struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t classes = 3;
  std::size_t subjects = 4;
  std::size_t trials_per_subject_per_class = 2;
  std::size_t trial_length = 200;
  std::size_t channels = 3;
  double sample_rate_hz = 50.0;
  double window_seconds = 0.8;  // 40 samples at 50 Hz
  double noise = 0.05;
  std::uint64_t seed = 7;
};

inline DatasetManifest synthetic_manifest(const SyntheticSpec& spec) {
  DatasetManifest m;
  m.name = spec.name;
  m.sample_rate_hz = spec.sample_rate_hz;
  for (std::size_t c = 0; c < spec.channels; ++c) m.channel_names.push_back("ch" + std::to_string(c));
  for (std::size_t g = 0; g + 3 <= spec.channels; g += 3) m.triplet_groups.push_back({g, g + 1, g + 2});
  m.window_seconds = spec.window_seconds;
  m.supported_windowing = all_windowing_techniques();
  return m;
}

inline Matrix synthetic_trial_samples(const SyntheticSpec& spec, std::size_t cls,
                                      std::size_t subject, Rng& rng) {
  Matrix samples(spec.trial_length, spec.channels);
  const double offset = 1.5 * static_cast<double>(cls + 1);
  const double amplitude = 0.5 * static_cast<double>(cls + 1);
  const double freq_hz = 1.0 * static_cast<double>(cls + 1);
  const double subject_bias = 0.03 * static_cast<double>(subject);
  for (std::size_t t = 0; t < spec.trial_length; ++t) {
    const double phase = 2.0 * 3.14159265358979323846 * freq_hz *
                         (static_cast<double>(t) / spec.sample_rate_hz);
    for (std::size_t c = 0; c < spec.channels; ++c) {
      const double channel_shift = 0.4 * static_cast<double>(c);
      samples(t, c) = offset + channel_shift + subject_bias +
                      amplitude * std::sin(phase + 0.7 * static_cast<double>(c)) +
                      spec.noise * rng.normal();
    }
  }
  return samples;
}

/// Fully in-memory TrialSet; labels are already 0..K-1.
inline TrialSet make_synthetic_trialset(const SyntheticSpec& spec) {
  TrialSet ts;
  ts.manifest = synthetic_manifest(spec);
  Rng rng(spec.seed);
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    const std::string subject = "s" + std::to_string(s);
    for (std::size_t k = 0; k < spec.classes; ++k) {
      for (std::size_t r = 0; r < spec.trials_per_subject_per_class; ++r) {
        Trial t;
        t.subject_id = subject;
        t.activity_id = static_cast<int>(k);
        t.trial_id = subject + "_a" + std::to_string(k) + "_t" + std::to_string(r);
        t.samples = synthetic_trial_samples(spec, k, s, rng);
        t.sample_rate_hz = spec.sample_rate_hz;
        ts.trials.push_back(std::move(t));
        ts.manifest.trial_sources.push_back(
            {subject, static_cast<int>(k), ts.trials.back().trial_id, ""});
      }
    }
  }
  ts.class_count = static_cast<int>(spec.classes);
  for (std::size_t k = 0; k < spec.classes; ++k) ts.source_labels.push_back(static_cast<int>(k));
  for (std::size_t s = 0; s < spec.subjects; ++s) ts.subject_ids.push_back("s" + std::to_string(s));
  return ts;
}

/// Writes the same dataset as manifest.json plus one CSV per trial, for
/// exercising the CLI without any real recordings.
inline std::filesystem::path write_synthetic_dataset(const std::filesystem::path& dir,
                                                     const SyntheticSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "trials");

  const TrialSet ts = make_synthetic_trialset(spec);
  DatasetManifest manifest = ts.manifest;
  manifest.trial_sources.clear();
  for (const auto& t : ts.trials) {
    const std::string rel = "trials/" + t.trial_id + ".csv";
    manifest.trial_sources.push_back({t.subject_id, t.activity_id, t.trial_id, rel});
    std::ofstream csv(dir / rel);
    for (std::size_t r = 0; r < t.samples.rows(); ++r) {
      for (std::size_t c = 0; c < t.samples.cols(); ++c) {
        if (c) csv << ',';
        csv << g17(t.samples(r, c));
      }
      csv << '\n';
    }
  }

  const fs::path manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path);
  out << manifest_to_json(manifest).dump(2) << '\n';
  return manifest_path;
}

}  // namespace harbench
