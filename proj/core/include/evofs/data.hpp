#pragma once

// Flow-record ingestion and preparation: CSV reading, schema checks for the
// CICFlowMeter layouts, cleaning, min-max scaling, class balancing and
// stratified splitting.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "evofs/dataset.hpp"

namespace evofs::data {

enum class DatasetKind {
  kGeneric,        // any header with a Label column
  kCicDdos2019,    // 88 columns
  kCseCicIds2018,  // 80 columns
};

DatasetKind parse_kind(std::string_view name);
std::string_view to_string(DatasetKind kind) noexcept;

struct Schema {
  DatasetKind kind;
  std::vector<std::string> required;
  // Known identifier columns some published files carry in addition.
  std::vector<std::string> optional;
  std::vector<std::string> drop;
  std::string label = "Label";
};

const Schema& schema_for(DatasetKind kind);

// Header cells are compared after trimming surrounding whitespace.
std::string normalize_column_name(std::string_view name);

// Throws Error(kSchema) listing missing and unexpected columns.
void check_header(const std::vector<std::string>& header, DatasetKind kind);

struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> sources;
  std::size_t skipped_header_rows = 0;

  std::size_t row_count() const noexcept { return rows.size(); }
};

// RFC 4180 CSV with a header row. Rows that repeat the header are skipped.
// Throws Error(kParse) with the 1-based line number of a ragged row.
RawTable read_csv(const std::filesystem::path& path);
RawTable parse_csv(std::string_view text, const std::string& source_name);

// Reads every file in order and concatenates them after checking each header.
RawTable ingest(std::span<const std::filesystem::path> paths, DatasetKind kind);

enum class Imputation { kMedian, kNearestRows };

struct PreprocessOptions {
  Imputation imputation = Imputation::kMedian;
  std::size_t impute_neighbors = 5;
  bool scale = true;
};

struct ColumnRange {
  double min = 0.0;
  double max = 0.0;
};

class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  explicit MinMaxScaler(std::vector<ColumnRange> ranges) : ranges_(std::move(ranges)) {}

  static MinMaxScaler fit(const Matrix& m);

  // Maps each column to [0, 1]; constant columns become 0. Values outside the
  // fitted range are clamped.
  void transform(Matrix& m) const;

  const std::vector<ColumnRange>& ranges() const noexcept { return ranges_; }

 private:
  std::vector<ColumnRange> ranges_;
};

struct Provenance {
  std::vector<std::string> source_files;
  std::string kind;
  std::vector<std::string> dropped_columns;
  std::string imputation;
  std::vector<std::pair<std::string, std::size_t>> imputed_counts;
  std::vector<std::pair<std::string, ColumnRange>> scaler;
  std::vector<std::string> label_map;  // class names in id order
  std::vector<std::pair<std::string, std::size_t>> row_counts;  // per stage
  std::vector<std::string> log;

  void stage(std::string name, std::size_t rows);
  nlohmann::json to_json() const;
};

struct Prepared {
  Dataset dataset;
  Provenance provenance;
};

// Drop identifiers, parse numerics, impute, deduplicate, encode labels, scale.
Prepared preprocess(const RawTable& raw, DatasetKind kind,
                    const PreprocessOptions& options = {});

// Rows kept per class: min(count, cap), with the smallest nonzero count as
// the cap when none is given.
std::vector<std::size_t> balanced_counts(std::span<const std::size_t> counts,
                                         std::optional<std::size_t> cap);

// Keeps min(count, cap) rows of each class, sampled without replacement, and
// shuffles the result. Without a cap the minority-class count is used.
Dataset downsample(const Dataset& ds, std::optional<std::size_t> cap,
                   std::uint64_t seed);

struct SplitPair {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_rows;  // indices into the source dataset
  std::vector<std::size_t> test_rows;
  double ratio = 0.8;
  std::uint64_t seed = 0;
};

// Per class: seeded shuffle, floor(ratio * count) rows (at least 1, at most
// count - 1) to train, the rest to test. Throws Error(kStratification) when a
// class has fewer than two rows.
SplitPair split(const Dataset& ds, double ratio, std::uint64_t seed);

// Stratified k-fold assignment: folds[f] lists the validation rows of fold f.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds,
                                                       std::size_t k,
                                                       std::uint64_t seed);

// Renders a dataset back to text cells (round-trip exact for doubles).
RawTable to_raw_table(const Dataset& ds);

// Column statistics, class counts and missing-value tallies of a raw table.
nlohmann::json describe(const RawTable& raw, DatasetKind kind);

// Columnar cache file; layout documented in docs/file-formats.md.
struct CachedDataset {
  Dataset dataset;
  bool scaled = true;
};

void write_dataset(const std::filesystem::path& path, const Dataset& ds, bool scaled);
CachedDataset read_dataset(const std::filesystem::path& path);

// Writes `contents` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace evofs::data
