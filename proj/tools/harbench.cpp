// harbench command-line driver: validate datasets, dump features, run
// windowing x validation experiments, and aggregate result grids.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "harbench/harbench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

/// Input files may live under $HARBENCH_DATA_DIR when not found as given.
fs::path resolve_input(const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || fs::exists(p)) return p;
  if (const char* root = std::getenv("HARBENCH_DATA_DIR")) {
    const fs::path candidate = fs::path(root) / p;
    if (fs::exists(candidate)) return candidate;
  }
  return p;
}

int cmd_validate(const std::string& manifest_arg, const std::string& out_arg) {
  const auto manifest = harbench::load_manifest(resolve_input(manifest_arg));
  const auto trialset = harbench::load_trials(manifest);
  const auto report = harbench::validate_trialset(trialset);
  const std::string text = report.to_json().dump(2);
  if (out_arg.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream out(out_arg);
    if (!out) throw harbench::DataError("cannot write " + out_arg);
    out << text << '\n';
    std::cout << "validation report written to " << out_arg << '\n';
    for (const auto& flag : report.flags) std::cout << "flag: " << flag << '\n';
  }
  return kExitOk;
}

int cmd_features(const std::string& manifest_arg, const std::string& technique_arg,
                 const std::string& out_arg) {
  const auto technique = harbench::windowing_from_string(technique_arg);
  if (!technique) {
    throw harbench::ConfigError("unknown technique '" + technique_arg +
                                "' (expected full, semi, or loto)");
  }
  const auto manifest = harbench::load_manifest(resolve_input(manifest_arg));
  if (!manifest.supports(*technique)) {
    throw harbench::ConfigError("dataset '" + manifest.name + "' does not support technique '" +
                                std::string(harbench::to_string(*technique)) + "'");
  }
  const auto trialset = harbench::load_trials(manifest);
  const auto windows =
      harbench::segment(trialset, *technique, manifest.window_samples());

  std::ofstream out(out_arg);
  if (!out) throw harbench::DataError("cannot write " + out_arg);
  harbench::write_feature_csv(out, windows, manifest);
  std::cout << windows.windows.size() << " windows x "
            << harbench::feature_dim(manifest) << " features -> " << out_arg << '\n';
  return kExitOk;
}

int cmd_run(const std::string& config_arg, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> jobs, const std::string& out_override, int verbosity) {
  auto cfg = harbench::load_config(resolve_input(config_arg));
  if (seed) {
    cfg.seeds.init = *seed;
    cfg.seeds.shuffle = *seed + 1;
    cfg.seeds.split = *seed + 2;
  }
  if (jobs) cfg.jobs = *jobs;
  if (!out_override.empty()) cfg.out_dir = out_override;
  cfg.manifest_path = resolve_input(cfg.manifest_path).string();
  cfg.verbosity = verbosity;

  const auto report = harbench::run_experiment(cfg);
  if (verbosity > 0) {
    std::cout << report.to_table();
    std::cout << "feature extraction per window: min " << harbench::g17(report.feature_timing.min_s)
              << " s, mean " << harbench::g17(report.feature_timing.mean_s) << " s, max "
              << harbench::g17(report.feature_timing.max_s) << " s\n";
    std::cout << "report files in " << cfg.out_dir << '\n';
  }
  if (!report.all_folds_valid) {
    std::cerr << "error: at least one fold failed its leakage audit; see report\n";
    return kExitRuntime;
  }
  return kExitOk;
}

struct MatrixCell {
  double mean_accuracy = 0.0;
};

int cmd_matrix(const std::string& dir_arg, std::string out_arg) {
  const fs::path dir = resolve_input(dir_arg);
  if (!fs::is_directory(dir)) {
    throw harbench::ConfigError("matrix: '" + dir.string() + "' is not a directory");
  }
  if (out_arg.empty()) out_arg = dir.string();

  // scheme -> dataset -> technique -> cell
  std::map<std::string, std::map<std::string, std::map<std::string, MatrixCell>>> grid;
  std::size_t reports = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    json j;
    try {
      std::ifstream in(entry.path());
      in >> j;
    } catch (...) {
      continue;  // unrelated json is not an error
    }
    if (!j.is_object() || j.value("schema", "") != "harbench.eval_report") continue;
    try {
      const std::string dataset = j.at("dataset").at("name").get<std::string>();
      const std::string technique = j.at("config").at("technique").get<std::string>();
      const std::string scheme = j.at("config").at("scheme").get<std::string>();
      grid[scheme][dataset][technique] = {j.at("mean_accuracy").get<double>()};
      ++reports;
    } catch (const json::exception&) {
      continue;
    }
  }
  if (reports == 0) {
    throw harbench::ConfigError("matrix: no evaluation reports found under " + dir.string());
  }

  const std::vector<std::string> techniques = {"full_non_overlapping", "semi_non_overlapping",
                                               "leave_one_trial_out"};
  std::ostringstream table;
  nlohmann::ordered_json out_json;
  out_json["schema"] = "harbench.matrix";
  out_json["version"] = 1;
  out_json["schemes"] = nlohmann::ordered_json::object();
  for (const auto& [scheme, datasets] : grid) {
    table << "mean accuracy (%), scheme: " << scheme << '\n';
    table << std::left << std::setw(16) << "dataset";
    for (const auto& t : techniques) table << std::right << std::setw(22) << t;
    table << '\n';
    auto& scheme_json = out_json["schemes"][scheme];
    for (const auto& [dataset, cells] : datasets) {
      table << std::left << std::setw(16) << dataset;
      auto& row_json = scheme_json[dataset];
      const auto support = harbench::stock_dataset_support(dataset);
      for (const auto& t : techniques) {
        const auto it = cells.find(t);
        bool supported = true;
        if (support) {
          const auto tech = harbench::windowing_from_string(t);
          supported = tech && support->count(*tech) > 0;
        }
        if (it != cells.end()) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * it->second.mean_accuracy);
          table << std::right << std::setw(22) << buf;
          row_json[t] = 100.0 * it->second.mean_accuracy;
        } else {
          table << std::right << std::setw(22) << (supported ? "-" : "- (unsupported)");
          row_json[t] = nullptr;
        }
      }
      table << '\n';
    }
    table << '\n';
  }

  fs::create_directories(out_arg);
  {
    std::ofstream f(fs::path(out_arg) / "matrix.txt");
    if (!f) throw harbench::DataError("cannot write matrix.txt under " + out_arg);
    f << table.str();
  }
  {
    std::ofstream f(fs::path(out_arg) / "matrix.json");
    f << out_json.dump(2) << '\n';
  }
  std::cout << table.str();
  std::cout << "aggregated " << reports << " report(s) -> " << out_arg << "/matrix.txt\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harbench: windowing x validation benchmark for wearable-sensor activity "
               "recognition with a handcrafted-feature + MLP pipeline"};
  app.require_subcommand(1);

  std::string manifest_arg, technique_arg = "semi", out_arg, config_arg;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  int verbosity = 1;

  auto* validate = app.add_subcommand("validate", "Load a dataset and print its validation report");
  validate->add_option("--manifest", manifest_arg, "Dataset manifest (json)")->required();
  validate->add_option("--out", out_arg, "Write the report here instead of stdout");

  auto* features = app.add_subcommand("features", "Extract windows and dump the feature matrix");
  features->add_option("--manifest", manifest_arg, "Dataset manifest (json)")->required();
  features->add_option("--technique", technique_arg, "full | semi | loto (default semi)");
  features->add_option("--out", out_arg, "Output CSV path")->required();

  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("--config", config_arg, "Run configuration (json)")->required();
  run->add_option("--seed", seed, "Override all seeds (init=S, shuffle=S+1, split=S+2)");
  run->add_option("--jobs", jobs, "Maximum concurrent folds");
  run->add_option("--out", out_arg, "Override the configured output directory");
  run->add_option("--verbosity", verbosity, "0 = quiet, 1 = normal");

  auto* matrix = app.add_subcommand("matrix", "Aggregate run reports into a dataset x technique grid");
  matrix->add_option("--config", config_arg, "Directory containing run outputs")->required();
  matrix->add_option("--out", out_arg, "Directory for matrix.txt / matrix.json (default: same)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (validate->parsed()) return cmd_validate(manifest_arg, out_arg);
    if (features->parsed()) return cmd_features(manifest_arg, technique_arg, out_arg);
    if (run->parsed()) return cmd_run(config_arg, seed, jobs, out_arg, verbosity);
    if (matrix->parsed()) return cmd_matrix(config_arg, out_arg);
  } catch (const harbench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const harbench::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
