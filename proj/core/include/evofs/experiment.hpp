#pragma once

// The before/after feature-selection experiment grid: every dataset is
// ingested, cleaned, balanced and split once; each (model, with/without
// selection) cell then trains on the shared train split and is scored on the
// shared test split.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evofs/classifiers.hpp"
#include "evofs/data.hpp"
#include "evofs/evo.hpp"
#include "evofs/feature_select.hpp"
#include "evofs/metrics.hpp"

namespace evofs::experiment {

inline constexpr int kConfigSchemaVersion = 1;

struct DatasetSource {
  std::string name;
  data::DatasetKind kind = data::DatasetKind::kGeneric;
  std::vector<std::filesystem::path> paths;
};

struct ExperimentConfig {
  std::vector<DatasetSource> datasets;
  std::optional<std::size_t> n_per_label = 1000;  // empty: minority-class count
  double split_ratio = 0.8;
  std::uint64_t seed = 42;
  std::vector<ml::ClassifierSpec> models;
  fs::CostWeights weights;
  evo::EvoConfig evo;
  fs::InnerValidation inner;
  std::vector<bool> fs_flags = {false, true};
  data::PreprocessOptions preprocess;
  bool strict_scaling = false;
  std::size_t threads = 1;
  std::filesystem::path output_dir = "evofs-out";

  // The four reference models in table order: SVM, RF, D_Tree, KNN.
  static std::vector<ml::ClassifierSpec> default_models();
  static ExperimentConfig defaults();

  // Relative dataset paths resolve against base_dir. Throws Error(kConfig)
  // naming the offending field.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
  std::string digest() const;
};

// Dataset after ingest -> preprocess -> downsample -> split (-> scaling).
struct PreparedSplit {
  std::string name;
  data::SplitPair split;
  data::Provenance provenance;
  std::vector<std::size_t> balanced_class_counts;
};

PreparedSplit prepare_dataset(const DatasetSource& source, const ExperimentConfig& config);

struct CellError {
  std::string kind;
  std::string message;
};

struct RunRecord {
  std::string dataset;
  std::string model;
  bool fs_applied = false;
  std::size_t total_features = 0;
  std::vector<std::string> selected_features;
  std::optional<double> selection_cost;
  std::optional<std::size_t> selection_evaluations;
  metrics::ConfusionMatrix confusion;
  metrics::Metrics metrics;
  std::vector<std::string> class_names;
  std::uint64_t seed = 0;
  double selection_time = 0.0;
  std::optional<CellError> error;

  std::string label() const;  // e.g. "D_TreeEVO"
  nlohmann::json body_json() const;
};

struct ExperimentReport {
  std::string tool_version;
  std::string generated_at;
  std::string config_digest;
  std::vector<nlohmann::json> datasets;  // per-dataset preparation summary
  std::vector<RunRecord> records;

  // Everything except wall-clock timings and the timestamp.
  nlohmann::json body() const;
  nlohmann::json to_json() const;
  // Model, Accuracy, Precision, Recall, F1-score, Training Time, Testing Time.
  std::string table_csv() const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

// report.json, results.csv and one confusion-matrix CSV per record.
void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir);

std::string tool_version();

}  // namespace evofs::experiment
