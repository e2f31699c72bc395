#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "harbench/error.hpp"
#include "harbench/features.hpp"
#include "harbench/model.hpp"
#include "harbench/preprocess.hpp"

namespace harbench {

/// One fold's fitted pipeline: scaler, PCA basis, and trained network,
/// serialized together so a checkpoint is self-contained.
struct PipelineModel {
  FeatureLayout layout;
  Scaler scaler;
  PcaModel pca;
  MlpParams mlp;
};

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r), m.row(r) + m.cols()));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.at(0).size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (row.size() != cols) throw DataError("model file: ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

}  // namespace detail

// Serialized field order (also the documented file layout):
// schema, version, feature_layout, scaler{mean,std}, pca{...}, mlp{...}.
inline nlohmann::ordered_json pipeline_to_json(const PipelineModel& pm) {
  nlohmann::ordered_json j;
  j["schema"] = "harbench.pipeline_model";
  j["version"] = 1;
  j["feature_layout"] = pm.layout.names;
  j["scaler"] = {{"mean", pm.scaler.mean}, {"std", pm.scaler.stddev}};
  j["pca"] = {{"input_dim", pm.pca.input_dim()},
              {"output_dim", pm.pca.output_dim()},
              {"retained_variance", pm.pca.retained_variance},
              {"explained_ratio", pm.pca.explained_ratio},
              {"eigenvalues", pm.pca.eigenvalues},
              {"basis", detail::matrix_to_json(pm.pca.basis)}};
  auto weights = nlohmann::ordered_json::array();
  for (const auto& w : pm.mlp.weights) weights.push_back(detail::matrix_to_json(w));
  j["mlp"] = {{"dims", pm.mlp.dims},
              {"leaky_slope", pm.mlp.leaky_slope},
              {"seed", pm.mlp.seed},
              {"weights", weights},
              {"biases", pm.mlp.biases}};
  return j;
}

inline PipelineModel pipeline_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != "harbench.pipeline_model") {
      throw DataError("model file: unexpected schema");
    }
    if (j.at("version").get<int>() != 1) {
      throw DataError("model file: unsupported version " + j.at("version").dump());
    }
    PipelineModel pm;
    pm.layout.names = j.at("feature_layout").get<std::vector<std::string>>();
    pm.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    pm.scaler.stddev = j.at("scaler").at("std").get<std::vector<double>>();
    const auto& pca = j.at("pca");
    pm.pca.retained_variance = pca.at("retained_variance").get<double>();
    pm.pca.explained_ratio = pca.at("explained_ratio").get<double>();
    pm.pca.eigenvalues = pca.at("eigenvalues").get<std::vector<double>>();
    pm.pca.basis = detail::matrix_from_json(pca.at("basis"));
    const auto& mlp = j.at("mlp");
    pm.mlp.dims = mlp.at("dims").get<std::vector<std::size_t>>();
    pm.mlp.leaky_slope = mlp.at("leaky_slope").get<double>();
    pm.mlp.seed = mlp.at("seed").get<std::uint64_t>();
    for (const auto& w : mlp.at("weights")) {
      pm.mlp.weights.push_back(detail::matrix_from_json(w));
    }
    pm.mlp.biases = mlp.at("biases").get<std::vector<std::vector<double>>>();
    return pm;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

inline void save_pipeline(const std::filesystem::path& path, const PipelineModel& pm) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << pipeline_to_json(pm).dump(2) << '\n';
}

inline PipelineModel load_pipeline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file parse error in " + path.string() + ": " + e.what());
  }
  return pipeline_from_json(j);
}

/// Features -> scaler -> PCA -> network, end to end for one window's
/// feature vector.
inline int pipeline_predict(const PipelineModel& pm, std::span<const double> features) {
  const std::vector<double> scaled = apply_scaler(pm.scaler, features);
  const std::vector<double> projected = apply_pca(pm.pca, scaled);
  return predict(pm.mlp, projected);
}

}  // namespace harbench
