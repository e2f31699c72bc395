// Writes a ready-to-use synthetic dataset (manifest + trial CSVs) and a run
// config, so the CLI can be exercised without downloading anything:
//
//   ./make_dataset /tmp/harbench-demo
//   ./harbench run --config /tmp/harbench-demo/run.json

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "harbench/harbench.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "harbench-demo";

  harbench::SyntheticSpec spec;
  spec.subjects = 4;
  const auto manifest_path = harbench::write_synthetic_dataset(dir / "dataset", spec);

  nlohmann::ordered_json config;
  config["manifest"] = manifest_path.string();
  config["technique"] = "semi_non_overlapping";
  config["scheme"] = "kfold";
  config["k"] = 5;
  config["epochs"] = 40;
  config["out_dir"] = (dir / "out").string();
  std::ofstream(dir / "run.json") << config.dump(2) << '\n';

  std::cout << "dataset:  " << manifest_path.string() << '\n'
            << "config:   " << (dir / "run.json").string() << '\n'
            << "next:     harbench run --config " << (dir / "run.json").string() << '\n';
  return 0;
}
