#include "evofs/experiment.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "evofs/error.hpp"
#include "evofs/parallel.hpp"

#ifndef EVOFS_VERSION_STRING
#define EVOFS_VERSION_STRING "0.0.0"
#endif

namespace evofs::experiment {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kConfig, "config field \"" + field + "\": " + what);
}

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) bad_field(where + key, "unknown field");
  }
}

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad_field(where + key, "wrong type");
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string safe_file_stem(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

std::string format_percent(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << 100.0 * v;
  return out.str();
}

std::string format_seconds(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(5) << v;
  return out.str();
}

RunRecord run_cell(const PreparedSplit& prepared, const ml::ClassifierSpec& spec,
                   bool fs_applied, const ExperimentConfig& config) {
  RunRecord record;
  record.dataset = prepared.name;
  record.model = ml::display_name(spec);
  record.fs_applied = fs_applied;
  record.seed = config.seed;
  record.class_names = prepared.split.train.class_names;
  record.total_features = prepared.split.train.cols();

  const Dataset* train = &prepared.split.train;
  const Dataset* test = &prepared.split.test;
  Dataset masked_train;
  Dataset masked_test;
  if (fs_applied) {
    const auto start = Clock::now();
    evo::EvoConfig evo_config = config.evo;
    evo_config.threads = 1;
    const fs::FsResult selection =
        fs::select_features(*train, spec, config.weights, evo_config, config.inner);
    record.selection_time = std::chrono::duration<double>(Clock::now() - start).count();
    record.selection_cost = selection.cost;
    record.selection_evaluations = selection.opt.evaluations_used;
    const auto columns = selection.mask.indices();
    masked_train = train->select_columns(columns);
    masked_test = test->select_columns(columns);
    train = &masked_train;
    test = &masked_test;
  }
  record.selected_features = train->feature_names;

  const ml::Model model = ml::train(spec, *train, config.seed);
  const ml::Prediction prediction = ml::predict(model, test->features);
  record.confusion =
      metrics::confusion_matrix(test->labels, prediction.labels, test->n_classes());
  record.metrics = metrics::scores(record.confusion);
  record.metrics.train_time = model.train_time();
  record.metrics.test_time = prediction.seconds;
  return record;
}

}  // namespace

std::string tool_version() { return EVOFS_VERSION_STRING; }

std::vector<ml::ClassifierSpec> ExperimentConfig::default_models() {
  return {ml::SvmSpec{}, ml::ForestSpec{}, ml::CartSpec{}, ml::KnnSpec{}};
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.models = default_models();
  c.evo.seed = c.seed;
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "config: expected a JSON object");
  reject_unknown_keys(j,
                      {"schema_version", "datasets", "n_per_label", "split_ratio", "seed",
                       "models", "weights", "evo", "inner_validation", "fs_flags",
                       "imputation", "strict_scaling", "threads", "output_dir"},
                      "");
  const int version = field<int>(j, "schema_version", -1, "");
  if (version != kConfigSchemaVersion) {
    bad_field("schema_version", "expected " + std::to_string(kConfigSchemaVersion));
  }

  ExperimentConfig c = defaults();
  c.seed = field<std::uint64_t>(j, "seed", c.seed, "");
  c.evo.seed = c.seed;

  if (!j.contains("datasets") || !j.at("datasets").is_array()) {
    bad_field("datasets", "expected an array");
  }
  for (std::size_t i = 0; i < j.at("datasets").size(); ++i) {
    const auto& d = j.at("datasets")[i];
    const std::string where = "datasets[" + std::to_string(i) + "].";
    if (!d.is_object()) bad_field(where, "expected an object");
    reject_unknown_keys(d, {"name", "kind", "paths"}, where);
    DatasetSource src;
    src.name = field<std::string>(d, "name", "", where);
    try {
      src.kind = data::parse_kind(field<std::string>(d, "kind", "generic", where));
    } catch (const Error& e) {
      bad_field(where + "kind", e.what());
    }
    for (const auto& p : field<std::vector<std::string>>(d, "paths", {}, where)) {
      std::filesystem::path path(p);
      src.paths.push_back(path.is_relative() && !base_dir.empty() ? base_dir / path : path);
    }
    c.datasets.push_back(std::move(src));
  }

  if (j.contains("n_per_label")) {
    const auto& n = j.at("n_per_label");
    if (n.is_string() && n == "auto") {
      c.n_per_label.reset();
    } else if (n.is_number_integer() && n.get<long long>() > 0) {
      c.n_per_label = n.get<std::size_t>();
    } else {
      bad_field("n_per_label", "expected a positive integer or \"auto\"");
    }
  }
  c.split_ratio = field<double>(j, "split_ratio", c.split_ratio, "");

  if (j.contains("models")) {
    c.models.clear();
    for (std::size_t i = 0; i < j.at("models").size(); ++i) {
      try {
        c.models.push_back(ml::spec_from_json(j.at("models")[i]));
      } catch (const Error& e) {
        bad_field("models[" + std::to_string(i) + "]", e.what());
      }
    }
  }

  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    reject_unknown_keys(w, {"w1", "w2", "w3", "w4"}, "weights.");
    c.weights.accuracy = field<double>(w, "w1", c.weights.accuracy, "weights.");
    c.weights.fpr = field<double>(w, "w2", c.weights.fpr, "weights.");
    c.weights.fnr = field<double>(w, "w3", c.weights.fnr, "weights.");
    c.weights.feature_ratio = field<double>(w, "w4", c.weights.feature_ratio, "weights.");
  }

  if (j.contains("evo")) {
    const auto& e = j.at("evo");
    reject_unknown_keys(e, {"n_particles", "max_fes", "k_neighbors", "seed", "stable_step_scale"},
                        "evo.");
    c.evo.n_particles = field<std::size_t>(e, "n_particles", c.evo.n_particles, "evo.");
    c.evo.max_fes = field<std::size_t>(e, "max_fes", c.evo.max_fes, "evo.");
    c.evo.k_neighbors = field<std::size_t>(e, "k_neighbors", c.evo.k_neighbors, "evo.");
    c.evo.seed = field<std::uint64_t>(e, "seed", c.evo.seed, "evo.");
    c.evo.stable_step_scale =
        field<double>(e, "stable_step_scale", c.evo.stable_step_scale, "evo.");
  }

  if (j.contains("inner_validation")) {
    const auto& v = j.at("inner_validation");
    reject_unknown_keys(v, {"seed", "folds"}, "inner_validation.");
    c.inner.seed = field<std::uint64_t>(v, "seed", c.inner.seed, "inner_validation.");
    c.inner.folds = field<std::size_t>(v, "folds", c.inner.folds, "inner_validation.");
  }

  if (j.contains("fs_flags")) c.fs_flags = field<std::vector<bool>>(j, "fs_flags", {}, "");

  const std::string imputation = field<std::string>(j, "imputation", "median", "");
  if (imputation == "median") {
    c.preprocess.imputation = data::Imputation::kMedian;
  } else if (imputation == "nearest_rows") {
    c.preprocess.imputation = data::Imputation::kNearestRows;
  } else {
    bad_field("imputation", "expected \"median\" or \"nearest_rows\"");
  }
  c.strict_scaling = field<bool>(j, "strict_scaling", c.strict_scaling, "");
  c.threads = field<std::size_t>(j, "threads", c.threads, "");
  if (j.contains("output_dir")) {
    std::filesystem::path out(field<std::string>(j, "output_dir", "", ""));
    c.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": invalid JSON: " + e.what());
  }
  return from_json(j, path.parent_path());
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["seed"] = seed;
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : datasets) {
    std::vector<std::string> paths;
    for (const auto& p : d.paths) paths.push_back(p.string());
    ds.push_back({{"name", d.name}, {"kind", std::string(data::to_string(d.kind))},
                  {"paths", paths}});
  }
  j["datasets"] = ds;
  j["n_per_label"] = n_per_label ? nlohmann::json(*n_per_label) : nlohmann::json("auto");
  j["split_ratio"] = split_ratio;
  nlohmann::json models_json = nlohmann::json::array();
  for (const auto& m : models) models_json.push_back(ml::to_json(m));
  j["models"] = models_json;
  j["weights"] = weights.to_json();
  j["evo"] = {{"n_particles", evo.n_particles},
              {"max_fes", evo.max_fes},
              {"k_neighbors", evo.k_neighbors},
              {"seed", evo.seed},
              {"stable_step_scale", evo.stable_step_scale}};
  j["inner_validation"] = {{"seed", inner.seed}, {"folds", inner.folds}};
  j["fs_flags"] = fs_flags;
  j["imputation"] =
      preprocess.imputation == data::Imputation::kMedian ? "median" : "nearest_rows";
  j["strict_scaling"] = strict_scaling;
  j["threads"] = threads;
  j["output_dir"] = output_dir.string();
  return j;
}

void ExperimentConfig::validate() const {
  if (datasets.empty()) bad_field("datasets", "at least one dataset is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    const std::string where = "datasets[" + std::to_string(i) + "]";
    if (datasets[i].name.empty()) bad_field(where + ".name", "must not be empty");
    if (!names.insert(datasets[i].name).second) bad_field(where + ".name", "duplicate name");
    if (datasets[i].paths.empty()) bad_field(where + ".paths", "at least one file is required");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) bad_field("split_ratio", "must lie in (0, 1)");
  if (models.empty()) bad_field("models", "at least one model is required");
  if (fs_flags.empty()) bad_field("fs_flags", "at least one flag is required");
  if (threads < 1) bad_field("threads", "must be >= 1");
  if (inner.folds == 1) bad_field("inner_validation.folds", "must be 0 (holdout) or >= 2");
  try {
    weights.validate();
  } catch (const Error& e) {
    bad_field("weights", e.what());
  }
  try {
    evo.validate();
  } catch (const Error& e) {
    bad_field("evo", e.what());
  }
}

std::string ExperimentConfig::digest() const {
  nlohmann::json j = to_json();
  // Neither affects results.
  j.erase("output_dir");
  j.erase("threads");
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a(j.dump());
  return out.str();
}

PreparedSplit prepare_dataset(const DatasetSource& source, const ExperimentConfig& config) {
  PreparedSplit out;
  out.name = source.name;
  const data::RawTable raw = data::ingest(source.paths, source.kind);
  data::PreprocessOptions options = config.preprocess;
  options.scale = false;
  data::Prepared prepared = data::preprocess(raw, source.kind, options);
  out.provenance = std::move(prepared.provenance);

  Dataset balanced = data::downsample(prepared.dataset, config.n_per_label,
                                      derive_seed(config.seed, {0x62616cULL}));
  out.provenance.stage("downsampled", balanced.rows());
  out.provenance.log.push_back(
      config.n_per_label ? "downsampled to at most " + std::to_string(*config.n_per_label) +
                               " rows per class"
                         : std::string("downsampled to the minority-class count"));
  out.balanced_class_counts = balanced.class_counts();

  if (!config.strict_scaling) {
    const auto scaler = data::MinMaxScaler::fit(balanced.features);
    scaler.transform(balanced.features);
    for (std::size_t c = 0; c < balanced.cols(); ++c) {
      out.provenance.scaler.emplace_back(balanced.feature_names[c], scaler.ranges()[c]);
    }
    out.provenance.log.push_back("min-max scaler fit on the balanced dataset");
  }

  out.split = data::split(balanced, config.split_ratio, derive_seed(config.seed, {0x73706cULL}));
  out.provenance.stage("train", out.split.train.rows());
  out.provenance.stage("test", out.split.test.rows());

  if (config.strict_scaling) {
    const auto scaler = data::MinMaxScaler::fit(out.split.train.features);
    scaler.transform(out.split.train.features);
    scaler.transform(out.split.test.features);
    for (std::size_t c = 0; c < balanced.cols(); ++c) {
      out.provenance.scaler.emplace_back(balanced.feature_names[c], scaler.ranges()[c]);
    }
    out.provenance.log.push_back("min-max scaler fit on the train split only");
  }
  return out;
}

std::string RunRecord::label() const { return fs_applied ? model + "EVO" : model; }

nlohmann::json RunRecord::body_json() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["model"] = model;
  j["fs_applied"] = fs_applied;
  j["seed"] = seed;
  if (error) {
    j["error"] = {{"kind", error->kind}, {"message", error->message}};
    return j;
  }
  j["total_features"] = total_features;
  j["selected_feature_count"] = selected_features.size();
  j["selected_features"] = selected_features;
  if (selection_cost) j["selection_cost"] = *selection_cost;
  if (selection_evaluations) j["selection_evaluations"] = *selection_evaluations;
  j["class_names"] = class_names;
  j["confusion_matrix"] = confusion.to_json();
  j["metrics"] = metrics.to_json(false);
  return j;
}

nlohmann::json ExperimentReport::body() const {
  nlohmann::json j;
  j["config_digest"] = config_digest;
  j["datasets"] = datasets;
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json rec = r.body_json();
    rec["config_digest"] = config_digest;
    recs.push_back(std::move(rec));
  }
  j["records"] = recs;
  return j;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["format"] = "evofs-experiment-report";
  j["version"] = 1;
  j["tool_version"] = tool_version;
  j["generated_at"] = generated_at;
  j["body"] = body();
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& r : records) {
    timings.push_back({{"dataset", r.dataset},
                       {"model", r.model},
                       {"fs_applied", r.fs_applied},
                       {"train_time", r.metrics.train_time},
                       {"test_time", r.metrics.test_time},
                       {"selection_time", r.selection_time}});
  }
  j["timings"] = timings;
  return j;
}

std::string ExperimentReport::table_csv() const {
  std::ostringstream out;
  out << "Dataset,Model,Features,Accuracy,Precision,Recall,F1-score,"
         "Training Time (s),Testing Time (s)\n";
  for (const auto& r : records) {
    out << r.dataset << ',' << r.label() << ',';
    if (r.error) {
      out << ",error,,,,,\n";
      continue;
    }
    out << r.selected_features.size() << ',' << format_percent(r.metrics.accuracy) << ','
        << format_percent(r.metrics.precision) << ',' << format_percent(r.metrics.recall)
        << ',' << format_percent(r.metrics.f1) << ',' << format_seconds(r.metrics.train_time)
        << ',' << format_seconds(r.metrics.test_time) << '\n';
  }
  return out.str();
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.tool_version = tool_version();
  report.generated_at = utc_timestamp();
  report.config_digest = config.digest();

  std::vector<std::optional<PreparedSplit>> prepared(config.datasets.size());
  std::vector<std::optional<CellError>> prep_errors(config.datasets.size());
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    const auto& source = config.datasets[d];
    nlohmann::json summary{{"name", source.name},
                           {"kind", std::string(data::to_string(source.kind))}};
    try {
      prepared[d] = prepare_dataset(source, config);
      const auto& p = *prepared[d];
      summary["features"] = p.split.train.cols();
      summary["class_names"] = p.split.train.class_names;
      summary["balanced_class_counts"] = p.balanced_class_counts;
      summary["train_rows"] = p.split.train.rows();
      summary["test_rows"] = p.split.test.rows();
      summary["provenance"] = p.provenance.to_json();
    } catch (const Error& e) {
      prep_errors[d] = CellError{to_string(e.kind()), e.what()};
      summary["error"] = {{"kind", prep_errors[d]->kind}, {"message", prep_errors[d]->message}};
    }
    report.datasets.push_back(std::move(summary));
  }

  struct Cell {
    std::size_t dataset;
    std::size_t model;
    bool fs;
  };
  std::vector<Cell> cells;
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    for (std::size_t m = 0; m < config.models.size(); ++m) {
      for (bool fs : config.fs_flags) cells.push_back({d, m, fs});
    }
  }

  report.records.resize(cells.size());
  parallel_for(cells.size(), config.threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const auto& spec = config.models[cell.model];
    RunRecord& out = report.records[i];
    const auto fail = [&](CellError error) {
      out = RunRecord();
      out.dataset = config.datasets[cell.dataset].name;
      out.model = ml::display_name(spec);
      out.fs_applied = cell.fs;
      out.seed = config.seed;
      out.error = std::move(error);
    };
    if (prep_errors[cell.dataset]) {
      fail(*prep_errors[cell.dataset]);
      return;
    }
    try {
      out = run_cell(*prepared[cell.dataset], spec, cell.fs, config);
    } catch (const Error& e) {
      fail(CellError{std::string(to_string(e.kind())), e.what()});
    } catch (const std::exception& e) {
      fail(CellError{"internal", e.what()});
    }
  });
  return report;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "confusion");
  for (const auto& r : report.records) {
    if (r.error) continue;
    const std::string stem = safe_file_stem(r.dataset + "_" + r.label());
    data::write_file_atomic(out_dir / "confusion" / (stem + ".csv"),
                            r.confusion.to_csv(r.class_names));
  }
  for (const auto& d : report.datasets) {
    if (!d.contains("provenance")) continue;
    data::write_file_atomic(
        out_dir / (safe_file_stem(d.at("name").get<std::string>()) + ".provenance.json"),
        d.at("provenance").dump(2) + "\n");
  }
  data::write_file_atomic(out_dir / "results.csv", report.table_csv());
  data::write_file_atomic(out_dir / "report.json", report.to_json().dump(2) + "\n");
}

}  // namespace evofs::experiment
