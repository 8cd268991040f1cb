// evofs: dataset preparation, EVO feature selection, evaluation, the
// before/after experiment grid and optimizer benchmarks.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evofs/bench.hpp"
#include "evofs/classifiers.hpp"
#include "evofs/data.hpp"
#include "evofs/error.hpp"
#include "evofs/evo.hpp"
#include "evofs/experiment.hpp"
#include "evofs/feature_select.hpp"
#include "evofs/metrics.hpp"

namespace {

namespace fsys = std::filesystem;
using evofs::Error;
using evofs::ErrorKind;

struct Globals {
  std::uint64_t seed = 42;
  std::optional<std::string> out;
  std::optional<std::string> config;
  std::size_t threads = 1;
  bool strict_scaling = false;
  bool seed_given = false;
};

struct DataInput {
  std::vector<std::string> inputs;
  std::string kind = "generic";
  std::string imputation = "median";
};

void add_data_input(CLI::App* cmd, DataInput& in) {
  cmd->add_option("-i,--input", in.inputs, "CSV files, or a single dataset cache")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--kind", in.kind, "generic | cic-ddos2019 | cse-cic-ids2018");
  cmd->add_option("--imputation", in.imputation, "median | nearest_rows");
}

evofs::data::Imputation parse_imputation(const std::string& name) {
  if (name == "median") return evofs::data::Imputation::kMedian;
  if (name == "nearest_rows") return evofs::data::Imputation::kNearestRows;
  throw Error(ErrorKind::kUsage, "unknown imputation \"" + name + "\"");
}

std::vector<fsys::path> to_paths(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

bool is_cache_file(const fsys::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[8] = {};
  in.read(magic, sizeof magic);
  return in.gcount() == 8 && std::string(magic, 7) == "EVOFSDS";
}

// Loads a cache written by `prep`, or ingests and cleans CSVs (unscaled).
evofs::data::CachedDataset load_input(const DataInput& in) {
  const auto paths = to_paths(in.inputs);
  if (paths.size() == 1 && is_cache_file(paths[0])) return evofs::data::read_dataset(paths[0]);
  const auto kind = evofs::data::parse_kind(in.kind);
  evofs::data::PreprocessOptions options;
  options.imputation = parse_imputation(in.imputation);
  options.scale = false;
  auto prepared = evofs::data::preprocess(evofs::data::ingest(paths, kind), kind, options);
  return {std::move(prepared.dataset), false};
}

void scale_in_place(evofs::Dataset& ds) {
  evofs::data::MinMaxScaler::fit(ds.features).transform(ds.features);
}

evofs::ml::ClassifierSpec parse_model(const std::string& name, const std::string& params) {
  nlohmann::json j = nlohmann::json::object();
  if (!params.empty()) {
    try {
      j = nlohmann::json::parse(params);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kUsage, std::string("--model-params: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::kUsage, "--model-params must be a JSON object");
  }
  j["type"] = name;
  try {
    return evofs::ml::spec_from_json(j);
  } catch (const Error& e) {
    throw Error(ErrorKind::kUsage, e.what());
  }
}

evofs::fs::CostWeights parse_weights(const std::vector<double>& w) {
  if (w.size() != 4) throw Error(ErrorKind::kUsage, "--weights expects four values w1 w2 w3 w4");
  evofs::fs::CostWeights out{w[0], w[1], w[2], w[3]};
  try {
    out.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kUsage, e.what());
  }
  return out;
}

fsys::path out_dir(const Globals& g, const std::string& fallback) {
  const fsys::path dir = g.out ? fsys::path(*g.out) : fsys::path(fallback);
  fsys::create_directories(dir);
  return dir;
}

void write_json(const fsys::path& path, const nlohmann::json& j) {
  evofs::data::write_file_atomic(path, j.dump(2) + "\n");
}

void reject_config(const Globals& g, const char* command) {
  if (g.config) {
    throw Error(ErrorKind::kUsage, std::string("--config applies to `experiment`, not `") +
                                       command + "`");
  }
}

// ---------------------------------------------------------------------------

struct PrepArgs {
  DataInput data;
  std::string per_label;
};

int run_prep(const Globals& g, const PrepArgs& a) {
  reject_config(g, "prep");
  const auto kind = evofs::data::parse_kind(a.data.kind);
  evofs::data::PreprocessOptions options;
  options.imputation = parse_imputation(a.data.imputation);
  options.scale = false;
  auto prepared = evofs::data::preprocess(evofs::data::ingest(to_paths(a.data.inputs), kind),
                                          kind, options);
  evofs::Dataset ds = std::move(prepared.dataset);
  auto& prov = prepared.provenance;
  if (!a.per_label.empty()) {
    std::optional<std::size_t> cap;
    if (a.per_label != "auto") {
      try {
        cap = std::stoull(a.per_label);
      } catch (const std::exception&) {
        throw Error(ErrorKind::kUsage, "--per-label expects a count or \"auto\"");
      }
    }
    ds = evofs::data::downsample(ds, cap, evofs::derive_seed(g.seed, {0x62616cULL}));
    prov.stage("downsampled", ds.rows());
  }
  const bool scaled = !g.strict_scaling;
  if (scaled) {
    const auto scaler = evofs::data::MinMaxScaler::fit(ds.features);
    scaler.transform(ds.features);
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      prov.scaler.emplace_back(ds.feature_names[c], scaler.ranges()[c]);
    }
  } else {
    prov.log.push_back("left unscaled; the scaler is fit on each train split");
  }
  const fsys::path dir = out_dir(g, "evofs-prep");
  evofs::data::write_dataset(dir / "dataset.evofs", ds, scaled);
  write_json(dir / "provenance.json", prov.to_json());
  std::cout << "wrote " << (dir / "dataset.evofs").string() << " (" << ds.rows() << " rows, "
            << ds.cols() << " features, " << ds.n_classes() << " classes)\n";
  return 0;
}

int run_describe(const Globals& g, const DataInput& in) {
  reject_config(g, "describe");
  const auto kind = evofs::data::parse_kind(in.kind);
  const nlohmann::json report = evofs::data::describe(evofs::data::ingest(to_paths(in.inputs), kind), kind);
  if (g.out) {
    fsys::path path(*g.out);
    if (path.has_parent_path()) fsys::create_directories(path.parent_path());
    write_json(path, report);
  } else {
    std::cout << report.dump(2) << "\n";
  }
  return 0;
}

struct ModelArgs {
  std::string model = "cart";
  std::string params;
};

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("-m,--model", m.model, "knn | cart | rf | svm");
  cmd->add_option("--model-params", m.params, "JSON object of hyperparameters, e.g. {\"k\":3}");
}

struct SelectArgs {
  DataInput data;
  ModelArgs model;
  std::vector<double> weights = {1.0, 0.0, 0.0, 0.0};
  std::size_t budget = 1000;
  std::size_t particles = 30;
  std::size_t folds = 0;
};

int run_select(const Globals& g, const SelectArgs& a) {
  reject_config(g, "select");
  auto input = load_input(a.data);
  if (!input.scaled) scale_in_place(input.dataset);
  evofs::evo::EvoConfig evo;
  evo.n_particles = a.particles;
  evo.max_fes = a.budget;
  evo.seed = g.seed;
  evo.threads = g.threads;
  evofs::fs::InnerValidation inner;
  inner.seed = evofs::derive_seed(g.seed, {0x696eULL});
  inner.folds = a.folds;
  const auto result = evofs::fs::select_features(
      input.dataset, parse_model(a.model.model, a.model.params), parse_weights(a.weights), evo,
      inner);
  const fsys::path dir = out_dir(g, "evofs-select");
  write_json(dir / "selection.json", result.to_json());
  std::cout << "selected " << result.mask.count() << "/" << result.mask.size()
            << " features, cost " << result.cost << "\n";
  return 0;
}

struct EvalArgs {
  DataInput data;
  ModelArgs model;
  std::string mask_file;
  double split_ratio = 0.8;
  bool weighted = false;
};

int run_eval(const Globals& g, const EvalArgs& a) {
  reject_config(g, "eval");
  auto input = load_input(a.data);
  evofs::Dataset ds = std::move(input.dataset);
  if (!input.scaled && !g.strict_scaling) scale_in_place(ds);
  if (!a.mask_file.empty()) {
    std::ifstream in(a.mask_file);
    if (!in) throw Error(ErrorKind::kIo, "cannot open " + a.mask_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, a.mask_file + ": " + e.what());
    }
    const auto mask = evofs::fs::mask_from_json(j);
    if (mask.size() != ds.cols()) {
      throw Error(ErrorKind::kUsage, "mask has " + std::to_string(mask.size()) +
                                         " bits but the dataset has " +
                                         std::to_string(ds.cols()) + " features");
    }
    ds = ds.select_columns(mask.indices());
  }
  auto split = evofs::data::split(ds, a.split_ratio, evofs::derive_seed(g.seed, {0x73706cULL}));
  if (!input.scaled && g.strict_scaling) {
    const auto scaler = evofs::data::MinMaxScaler::fit(split.train.features);
    scaler.transform(split.train.features);
    scaler.transform(split.test.features);
  }
  const auto model = evofs::ml::train(parse_model(a.model.model, a.model.params), split.train, g.seed);
  const auto prediction = evofs::ml::predict(model, split.test.features);
  const auto cm = evofs::metrics::confusion_matrix(split.test.labels, prediction.labels,
                                                   split.test.n_classes());
  auto m = evofs::metrics::scores(
      cm, a.weighted ? evofs::metrics::Averaging::kWeighted : evofs::metrics::Averaging::kMacro);
  m.train_time = model.train_time();
  m.test_time = prediction.seconds;

  const fsys::path dir = out_dir(g, "evofs-eval");
  evofs::ml::save_model(dir / "model.json", model);
  evofs::data::write_file_atomic(dir / "confusion.csv", cm.to_csv(split.test.class_names));
  write_json(dir / "metrics.json", {{"model", model.algorithm()},
                                    {"features", ds.feature_names},
                                    {"train_rows", split.train.rows()},
                                    {"test_rows", split.test.rows()},
                                    {"seed", g.seed},
                                    {"converged", model.converged()},
                                    {"confusion_matrix", cm.to_json()},
                                    {"metrics", m.to_json(true)}});
  std::cout << model.algorithm() << ": accuracy " << m.accuracy << ", f1 " << m.f1 << "\n";
  return 0;
}

int run_experiment_cmd(const Globals& g) {
  if (!g.config) throw Error(ErrorKind::kUsage, "experiment requires --config <file>");
  auto config = evofs::experiment::ExperimentConfig::load(*g.config);
  if (g.seed_given) {
    config.seed = g.seed;
    config.evo.seed = g.seed;
  }
  if (g.out) config.output_dir = *g.out;
  config.threads = g.threads;
  if (g.strict_scaling) config.strict_scaling = true;
  config.validate();

  const auto report = evofs::experiment::run_experiment(config);
  evofs::experiment::write_report(report, config.output_dir);
  std::cout << report.table_csv();
  std::size_t failed = 0;
  for (const auto& r : report.records) failed += r.error ? 1 : 0;
  if (failed > 0) {
    std::cerr << failed << " of " << report.records.size()
              << " cells failed; see report.json\n";
    return 2;
  }
  return 0;
}

struct BenchArgs {
  std::string function = "sphere";
  std::size_t dims = 10;
  std::size_t budget = 5000;
  std::size_t particles = 30;
  std::size_t runs = 10;
  double step_scale = 0.1;
};

int run_bench_cmd(const Globals& g, const BenchArgs& a) {
  reject_config(g, "bench");
  if (a.dims < 1) throw Error(ErrorKind::kUsage, "--dims must be >= 1");
  evofs::evo::EvoConfig config;
  config.n_particles = a.particles;
  config.max_fes = a.budget;
  config.seed = g.seed;
  config.stable_step_scale = a.step_scale;
  config.threads = g.threads;
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kUsage, e.what());
  }
  const auto record =
      evofs::bench::run_bench(evofs::bench::parse_function(a.function), a.dims, config, a.runs);
  const fsys::path dir = out_dir(g, "evofs-bench");
  evofs::data::write_file_atomic(dir / "history.csv", record.history_csv());
  write_json(dir / "summary.json", record.summary_json());
  std::cout << a.function << " d=" << a.dims << ": median best " << record.median_best()
            << " over " << a.runs << " runs in " << record.seconds << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EVO wrapper feature selection for intrusion-detection datasets", "evofs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", evofs::experiment::tool_version());

  Globals g;
  app.add_option_function<std::uint64_t>(
         "--seed",
         [&](const std::uint64_t& s) {
           g.seed = s;
           g.seed_given = true;
         },
         "Master seed (default 42)")
      ->configurable(false);
  app.add_option("--out", g.out, "Output directory (file for describe)");
  app.add_option("--config", g.config, "Experiment config JSON")->check(CLI::ExistingFile);
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict-scaling", g.strict_scaling, "Fit the min-max scaler on train rows only");
  app.fallthrough();

  PrepArgs prep;
  auto* prep_cmd = app.add_subcommand("prep", "Clean, balance and scale CSVs into a dataset cache");
  add_data_input(prep_cmd, prep.data);
  prep_cmd->add_option("--per-label", prep.per_label, "Rows kept per class, or \"auto\"");

  DataInput describe;
  auto* describe_cmd = app.add_subcommand("describe", "Class counts, column stats, missing values");
  add_data_input(describe_cmd, describe);

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "Run EVO feature selection on a dataset");
  add_data_input(select_cmd, select.data);
  add_model_options(select_cmd, select.model);
  select_cmd->add_option("--weights", select.weights, "w1 w2 w3 w4")->expected(4);
  select_cmd->add_option("--budget", select.budget, "Objective evaluations");
  select_cmd->add_option("--particles", select.particles, "Population size");
  select_cmd->add_option("--folds", select.folds, "Inner k-fold count (0: 75/25 holdout)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Train and score one classifier on a split");
  add_data_input(eval_cmd, eval.data);
  add_model_options(eval_cmd, eval.model);
  eval_cmd->add_option("--mask", eval.mask_file, "selection.json from `select`")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--split-ratio", eval.split_ratio, "Train fraction");
  eval_cmd->add_flag("--weighted", eval.weighted, "Support-weighted averaging instead of macro");

  auto* experiment_cmd =
      app.add_subcommand("experiment", "Run the before/after feature-selection grid");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Optimizer convergence on a test function");
  bench_cmd->add_option("--function", bench.function, "sphere | rastrigin | rosenbrock");
  bench_cmd->add_option("--dims", bench.dims, "Dimensions");
  bench_cmd->add_option("--budget", bench.budget, "Evaluations per run");
  bench_cmd->add_option("--particles", bench.particles, "Population size");
  bench_cmd->add_option("--runs", bench.runs, "Seeds seed, seed+1, ...");
  bench_cmd->add_option("--step-scale", bench.step_scale, "Stable-particle walk scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*prep_cmd) return run_prep(g, prep);
    if (*describe_cmd) return run_describe(g, describe);
    if (*select_cmd) return run_select(g, select);
    if (*eval_cmd) return run_eval(g, eval);
    if (*experiment_cmd) return run_experiment_cmd(g);
    if (*bench_cmd) return run_bench_cmd(g, bench);
  } catch (const Error& e) {
    std::cerr << "evofs: " << evofs::to_string(e.kind()) << " error: " << e.what() << "\n";
    return evofs::exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "evofs: io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "evofs: internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
