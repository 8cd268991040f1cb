#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evofs/error.hpp"
#include "evofs/experiment.hpp"
#include "support.hpp"

namespace evofs::experiment {
namespace {

using testing::fresh_temp_dir;
using testing::synthetic_flow_csv;
using testing::write_text;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json small_config_json() {
  return {{"schema_version", 1},
          {"seed", 5},
          {"datasets",
           {{{"name", "alpha"}, {"kind", "generic"}, {"paths", {"alpha.csv"}}},
            {{"name", "beta"}, {"kind", "generic"}, {"paths", {"beta.csv"}}}}},
          {"n_per_label", 40},
          {"models",
           {{{"type", "svm"}},
            {{"type", "rf"}, {"n_trees", 10}},
            {{"type", "cart"}},
            {{"type", "knn"}, {"k", 3}}}},
          {"evo", {{"n_particles", 6}, {"max_fes", 40}}}};
}

class ExperimentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fresh_temp_dir(::testing::UnitTest::GetInstance()->current_test_info()->name());
    write_text(dir_ / "alpha.csv", synthetic_flow_csv(60, 1, {"BENIGN", "DDoS"}));
    write_text(dir_ / "beta.csv", synthetic_flow_csv(50, 2, {"Benign", "Bot", "Infilteration"}));
  }
  ExperimentConfig config() const { return ExperimentConfig::from_json(small_config_json(), dir_); }

  std::filesystem::path dir_;
};

TEST_F(ExperimentTest, GridCardinality) {
  const auto report = run_experiment(config());
  EXPECT_EQ(report.records.size(), 16u);
  EXPECT_EQ(report.records[0].label(), "SVM");
  EXPECT_EQ(report.records[1].label(), "SVMEVO");
  EXPECT_EQ(report.records[5].label(), "D_TreeEVO");
  for (const auto& r : report.records) EXPECT_FALSE(r.error) << r.error->message;
}

TEST_F(ExperimentTest, BodiesByteIdenticalAcrossRuns) {
  auto c = config();
  const auto a = run_experiment(c);
  c.threads = 3;
  const auto b = run_experiment(c);
  EXPECT_EQ(a.body().dump(), b.body().dump());
  EXPECT_EQ(a.table_csv().substr(0, 60), b.table_csv().substr(0, 60));
}

TEST_F(ExperimentTest, MetricsRecomputeFromConfusion) {
  const auto report = run_experiment(config());
  const auto body = report.body();
  for (const auto& rec : body.at("records")) {
    const auto cm = metrics::ConfusionMatrix::from_json(rec.at("confusion_matrix"));
    const auto m = metrics::scores(cm).to_json(false);
    EXPECT_EQ(rec.at("metrics"), m);
  }
}

TEST_F(ExperimentTest, SelectedFeaturesAreSubsetOfBaseline) {
  const auto report = run_experiment(config());
  for (const auto& with : report.records) {
    if (!with.fs_applied) continue;
    const auto base = std::find_if(report.records.begin(), report.records.end(), [&](const RunRecord& r) {
      return !r.fs_applied && r.dataset == with.dataset && r.model == with.model;
    });
    ASSERT_NE(base, report.records.end());
    for (const auto& f : with.selected_features) {
      EXPECT_NE(std::find(base->selected_features.begin(), base->selected_features.end(), f),
                base->selected_features.end());
    }
    EXPECT_LE(with.selected_features.size(), base->selected_features.size());
  }
}

TEST_F(ExperimentTest, SharedSplitAcrossCells) {
  const auto report = run_experiment(config());
  for (const auto& r : report.records) {
    if (r.dataset != "alpha") continue;
    EXPECT_EQ(r.confusion.total(), report.records[0].confusion.total());
  }
}

TEST_F(ExperimentTest, BrokenDatasetRecordedPerCell) {
  write_text(dir_ / "beta.csv", "a,b,Label\n1,2,A\n1,2\n");
  const auto report = run_experiment(config());
  ASSERT_EQ(report.records.size(), 16u);
  for (const auto& r : report.records) {
    if (r.dataset == "beta") {
      ASSERT_TRUE(r.error);
      EXPECT_EQ(r.error->kind, "parse");
    } else {
      EXPECT_FALSE(r.error);
    }
  }
  EXPECT_TRUE(report.body().at("records")[8].contains("error"));
}

TEST_F(ExperimentTest, WritesArtifactsAtomically) {
  const auto out = dir_ / "out";
  const auto report = run_experiment(config());
  write_report(report, out);
  EXPECT_TRUE(std::filesystem::exists(out / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(out / "results.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "confusion" / "alpha_D_TreeEVO.csv"));
  EXPECT_TRUE(std::filesystem::exists(out / "beta.provenance.json"));
  for (const auto& e : std::filesystem::recursive_directory_iterator(out)) {
    EXPECT_EQ(e.path().string().find(".tmp"), std::string::npos) << e.path();
  }
  const auto j = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(j.at("format"), "evofs-experiment-report");
  EXPECT_EQ(j.at("body"), report.body());
  EXPECT_EQ(j.at("timings").size(), 16u);
  const std::string csv = slurp(out / "results.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "Dataset,Model,Features,Accuracy,Precision,Recall,F1-score,Training Time (s),"
            "Testing Time (s)");
}

TEST_F(ExperimentTest, StrictScalingFitsOnTrainOnly) {
  auto c = config();
  c.strict_scaling = true;
  const auto p = prepare_dataset(c.datasets[0], c);
  for (std::size_t col = 0; col < p.split.train.cols(); ++col) {
    double lo = 1.0, hi = 0.0;
    for (std::size_t r = 0; r < p.split.train.rows(); ++r) {
      lo = std::min(lo, p.split.train.features(r, col));
      hi = std::max(hi, p.split.train.features(r, col));
    }
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 1.0);
  }
  for (double v : p.split.test.features.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST_F(ExperimentTest, PreparedDatasetIsBalanced) {
  const auto c = config();
  const auto p = prepare_dataset(c.datasets[1], c);
  EXPECT_EQ(p.balanced_class_counts, (std::vector<std::size_t>{40, 40, 40}));
  EXPECT_EQ(p.split.train.rows(), 96u);
  EXPECT_EQ(p.split.test.rows(), 24u);
}

TEST(ExperimentConfig, FieldLevelDiagnostics) {
  auto expect_config_error = [](nlohmann::json j, const std::string& field) {
    try {
      ExperimentConfig::from_json(j);
      ADD_FAILURE() << "accepted invalid " << field;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfig);
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  auto base = small_config_json();
  auto j = base;
  j["schema_version"] = 2;
  expect_config_error(j, "schema_version");
  j = base;
  j["split_ratio"] = 1.5;
  expect_config_error(j, "split_ratio");
  j = base;
  j["models"][1]["n_trees"] = 0;
  expect_config_error(j, "models[1]");
  j = base;
  j["datasets"][0]["kind"] = "kdd";
  expect_config_error(j, "datasets[0].kind");
  j = base;
  j["evo"]["n_particles"] = 1;
  expect_config_error(j, "evo");
  j = base;
  j["colour"] = "red";
  expect_config_error(j, "colour");
  j = base;
  j["weights"] = {{"w1", -1}};
  expect_config_error(j, "weights");
  j = base;
  j["datasets"][1]["name"] = "alpha";
  expect_config_error(j, "datasets[1].name");
}

TEST(ExperimentConfig, RoundTripAndDigest) {
  const auto c = ExperimentConfig::from_json(small_config_json(), "/data");
  EXPECT_EQ(c.datasets[0].paths[0], std::filesystem::path("/data/alpha.csv"));
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.digest(), c.digest());
  auto other = c;
  other.threads = 8;
  other.output_dir = "/elsewhere";
  EXPECT_EQ(other.digest(), c.digest());
  other.seed = 6;
  EXPECT_NE(other.digest(), c.digest());
}

TEST(ExperimentConfig, DefaultsMatchReferenceGrid) {
  const auto c = ExperimentConfig::defaults();
  ASSERT_EQ(c.models.size(), 4u);
  EXPECT_EQ(ml::display_name(c.models[0]), "SVM");
  EXPECT_EQ(ml::display_name(c.models[1]), "RF");
  EXPECT_EQ(ml::display_name(c.models[2]), "D_Tree");
  EXPECT_EQ(ml::display_name(c.models[3]), "KNN");
  EXPECT_EQ(c.n_per_label, 1000u);
  EXPECT_EQ(c.fs_flags, (std::vector<bool>{false, true}));
}

TEST(ExperimentConfig, AutoCap) {
  auto j = small_config_json();
  j["n_per_label"] = "auto";
  EXPECT_FALSE(ExperimentConfig::from_json(j).n_per_label);
}

}  // namespace
}  // namespace evofs::experiment
