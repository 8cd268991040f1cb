#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "evofs/data.hpp"
#include "evofs/error.hpp"

namespace evofs::data {

namespace {

enum class CellKind { kNumber, kMissing, kText };

struct Cell {
  CellKind kind;
  double value;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

Cell parse_cell(std::string_view text) {
  std::string_view s = trim(text);
  if (s.empty()) return {CellKind::kMissing, 0.0};
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    if (ec == std::errc::result_out_of_range) return {CellKind::kMissing, 0.0};
    return {CellKind::kText, 0.0};
  }
  // "Infinity", "NaN" and overflowed values are treated as not observed.
  if (!std::isfinite(v)) return {CellKind::kMissing, 0.0};
  return {CellKind::kNumber, v};
}

std::string label_key(std::string_view label) {
  std::string key(trim(label));
  for (char& c : key) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return key;
}

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return lower + (upper - lower) / 2.0;
}

using ObservedMask = std::vector<std::vector<bool>>;

void impute_median(Matrix& m, const ObservedMask& observed,
                   std::vector<std::size_t>& counts) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    std::vector<double> seen;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (observed[r][c]) seen.push_back(m(r, c));
    }
    const double fill = seen.empty() ? 0.0 : median(std::move(seen));
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (!observed[r][c]) {
        m(r, c) = fill;
        ++counts[c];
      }
    }
  }
}

// Mean of the k nearest rows that observe the column; distance is the mean
// squared range-normalized difference over columns both rows observe.
void impute_nearest_rows(Matrix& m, const ObservedMask& observed, std::size_t k,
                         std::vector<std::size_t>& counts) {
  std::vector<ColumnRange> range(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (!observed[r][c]) continue;
      lo = std::min(lo, m(r, c));
      hi = std::max(hi, m(r, c));
    }
    range[c] = lo <= hi ? ColumnRange{lo, hi} : ColumnRange{0.0, 0.0};
  }
  auto scaled = [&](std::size_t r, std::size_t c) {
    const double span = range[c].max - range[c].min;
    return span > 0.0 ? (m(r, c) - range[c].min) / span : 0.0;
  };

  const Matrix original = m;
  std::vector<std::size_t> fallback_columns;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<std::size_t> gaps;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!observed[r][c]) gaps.push_back(c);
    }
    if (gaps.empty()) continue;

    std::vector<std::pair<double, std::size_t>> by_distance;
    for (std::size_t o = 0; o < m.rows(); ++o) {
      if (o == r) continue;
      double sum = 0.0;
      std::size_t shared = 0;
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (!observed[r][c] || !observed[o][c]) continue;
        const double d = scaled(r, c) - scaled(o, c);
        sum += d * d;
        ++shared;
      }
      const double dist = shared ? sum / static_cast<double>(shared)
                                 : std::numeric_limits<double>::infinity();
      by_distance.emplace_back(dist, o);
    }
    std::sort(by_distance.begin(), by_distance.end());

    for (std::size_t c : gaps) {
      double sum = 0.0;
      std::size_t used = 0;
      for (const auto& [dist, o] : by_distance) {
        if (used == k) break;
        if (!observed[o][c]) continue;
        sum += original(o, c);
        ++used;
      }
      m(r, c) = used ? sum / static_cast<double>(used) : 0.0;
      ++counts[c];
    }
  }
}

}  // namespace

void Provenance::stage(std::string name, std::size_t rows) {
  row_counts.emplace_back(std::move(name), rows);
}

nlohmann::json Provenance::to_json() const {
  nlohmann::json j;
  j["format"] = "evofs-provenance";
  j["version"] = 1;
  j["kind"] = kind;
  j["source_files"] = source_files;
  j["dropped_columns"] = dropped_columns;
  j["imputation"] = imputation;
  nlohmann::json imputed = nlohmann::json::object();
  for (const auto& [name, count] : imputed_counts) imputed[name] = count;
  j["imputed_counts"] = imputed;
  nlohmann::json scaler_json = nlohmann::json::array();
  for (const auto& [name, r] : scaler) {
    scaler_json.push_back({{"column", name}, {"min", r.min}, {"max", r.max}});
  }
  j["scaler_params"] = scaler_json;
  j["label_map"] = label_map;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& [name, rows] : row_counts) {
    stages.push_back({{"stage", name}, {"rows", rows}});
  }
  j["row_counts"] = stages;
  j["log"] = log;
  return j;
}

MinMaxScaler MinMaxScaler::fit(const Matrix& m) {
  std::vector<ColumnRange> ranges(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    if (m.rows() == 0) continue;
    ranges[c] = {m(0, c), m(0, c)};
    for (std::size_t r = 1; r < m.rows(); ++r) {
      ranges[c].min = std::min(ranges[c].min, m(r, c));
      ranges[c].max = std::max(ranges[c].max, m(r, c));
    }
  }
  return MinMaxScaler(std::move(ranges));
}

void MinMaxScaler::transform(Matrix& m) const {
  if (m.cols() != ranges_.size()) {
    throw Error(ErrorKind::kUsage, "MinMaxScaler: width mismatch");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const double span = ranges_[c].max - ranges_[c].min;
      double& v = m(r, c);
      v = span > 0.0 ? std::clamp((v - ranges_[c].min) / span, 0.0, 1.0) : 0.0;
    }
  }
}

Prepared preprocess(const RawTable& raw, DatasetKind kind,
                    const PreprocessOptions& options) {
  const Schema& schema = schema_for(kind);
  Provenance prov;
  prov.kind = std::string(to_string(kind));
  prov.source_files = raw.sources;
  prov.stage("ingested", raw.row_count());
  if (raw.skipped_header_rows) {
    prov.log.push_back("skipped " + std::to_string(raw.skipped_header_rows) +
                       " repeated header rows");
  }

  std::optional<std::size_t> label_col;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    const std::string& name = raw.columns[c];
    if (name == schema.label) {
      label_col = c;
    } else if (std::find(schema.drop.begin(), schema.drop.end(), name) !=
               schema.drop.end()) {
      prov.dropped_columns.push_back(name);
    } else {
      feature_cols.push_back(c);
    }
  }
  if (!label_col) {
    throw Error(ErrorKind::kSchema, "required column \"" + schema.label + "\" is missing");
  }
  for (const auto& name : prov.dropped_columns) {
    prov.log.push_back("dropped identifier column \"" + name + "\"");
  }

  // Parse; rows without a label are discarded.
  std::vector<std::size_t> kept_rows;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    if (!trim(raw.rows[r][*label_col]).empty()) kept_rows.push_back(r);
  }
  if (kept_rows.size() != raw.rows.size()) {
    prov.log.push_back("dropped " + std::to_string(raw.rows.size() - kept_rows.size()) +
                       " rows with an empty label");
  }

  const std::size_t n = kept_rows.size();
  const std::size_t d = feature_cols.size();
  Matrix values(n, d);
  ObservedMask observed(n, std::vector<bool>(d, false));
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t numbers = 0;
    std::size_t texts = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Cell cell = parse_cell(raw.rows[kept_rows[i]][feature_cols[c]]);
      if (cell.kind == CellKind::kNumber) {
        values(i, c) = cell.value;
        observed[i][c] = true;
        ++numbers;
      } else if (cell.kind == CellKind::kText) {
        ++texts;
      }
    }
    const std::string& name = raw.columns[feature_cols[c]];
    if (numbers == 0 && texts > 0) {
      throw Error(ErrorKind::kSchema, "column \"" + name +
                                          "\" is non-numeric and not an identifier column");
    }
    if (texts > 0) {
      prov.log.push_back("column \"" + name + "\": " + std::to_string(texts) +
                         " non-numeric cells treated as missing");
    }
  }

  std::vector<std::size_t> imputed(d, 0);
  if (options.imputation == Imputation::kMedian) {
    prov.imputation = "median";
    impute_median(values, observed, imputed);
  } else {
    prov.imputation = "nearest_rows(k=" + std::to_string(options.impute_neighbors) + ")";
    impute_nearest_rows(values, observed, options.impute_neighbors, imputed);
  }
  for (std::size_t c = 0; c < d; ++c) {
    if (imputed[c]) prov.imputed_counts.emplace_back(raw.columns[feature_cols[c]], imputed[c]);
  }
  prov.stage("parsed", n);

  // Exact duplicates: identical feature bits and normalized label.
  std::vector<std::string> keys(n);
  std::unordered_set<std::string> seen;
  std::vector<std::size_t> unique_rows;
  for (std::size_t i = 0; i < n; ++i) {
    std::string key = label_key(raw.rows[kept_rows[i]][*label_col]);
    key.push_back('\0');
    const auto row = values.row(i);
    key.append(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(double));
    if (seen.insert(key).second) unique_rows.push_back(i);
  }
  if (unique_rows.size() != n) {
    prov.log.push_back("removed " + std::to_string(n - unique_rows.size()) +
                       " duplicate rows");
  }
  prov.stage("deduplicated", unique_rows.size());
  if (unique_rows.empty()) throw Error(ErrorKind::kData, "no rows left after cleaning");

  Dataset ds;
  ds.features = values.select_rows(unique_rows);
  for (std::size_t c : feature_cols) ds.feature_names.push_back(raw.columns[c]);

  std::unordered_map<std::string, Label> label_ids;
  ds.labels.reserve(unique_rows.size());
  for (std::size_t i : unique_rows) {
    const std::string& text = raw.rows[kept_rows[i]][*label_col];
    const auto [it, inserted] =
        label_ids.emplace(label_key(text), static_cast<Label>(ds.class_names.size()));
    if (inserted) ds.class_names.emplace_back(trim(text));
    ds.labels.push_back(it->second);
  }
  prov.label_map = ds.class_names;

  if (options.scale) {
    const MinMaxScaler scaler = MinMaxScaler::fit(ds.features);
    scaler.transform(ds.features);
    for (std::size_t c = 0; c < d; ++c) {
      prov.scaler.emplace_back(ds.feature_names[c], scaler.ranges()[c]);
    }
  }
  ds.validate();
  return Prepared{std::move(ds), std::move(prov)};
}

RawTable to_raw_table(const Dataset& ds) {
  RawTable raw;
  raw.columns = ds.feature_names;
  raw.columns.push_back("Label");
  raw.rows.reserve(ds.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    std::vector<std::string> cells;
    cells.reserve(ds.cols() + 1);
    for (double v : ds.features.row(r)) {
      char buf[64];
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      cells.emplace_back(buf, res.ptr);
    }
    cells.push_back(ds.class_names[static_cast<std::size_t>(ds.labels[r])]);
    raw.rows.push_back(std::move(cells));
  }
  return raw;
}

nlohmann::json describe(const RawTable& raw, DatasetKind kind) {
  const Schema& schema = schema_for(kind);
  nlohmann::json out;
  out["kind"] = std::string(to_string(kind));
  out["sources"] = raw.sources;
  out["rows"] = raw.row_count();
  out["columns"] = raw.columns.size();

  std::optional<std::size_t> label_col;
  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    if (raw.columns[c] == schema.label) label_col = c;
  }
  nlohmann::json classes = nlohmann::json::array();
  if (label_col) {
    std::vector<std::string> order;
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& row : raw.rows) {
      const std::string key(trim(row[*label_col]));
      if (counts.find(key) == counts.end()) order.push_back(key);
      ++counts[key];
    }
    for (const auto& name : order) classes.push_back({{"label", name}, {"count", counts[name]}});
  }
  out["class_counts"] = classes;

  nlohmann::json stats = nlohmann::json::array();
  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    if (label_col && c == *label_col) continue;
    std::size_t missing = 0;
    std::size_t text = 0;
    std::size_t numbers = 0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    for (const auto& row : raw.rows) {
      const Cell cell = parse_cell(row[c]);
      if (cell.kind == CellKind::kMissing) {
        ++missing;
      } else if (cell.kind == CellKind::kText) {
        ++text;
      } else {
        ++numbers;
        lo = std::min(lo, cell.value);
        hi = std::max(hi, cell.value);
        sum += cell.value;
      }
    }
    nlohmann::json col = {{"name", raw.columns[c]},
                          {"missing", missing},
                          {"non_numeric", text},
                          {"numeric", numbers}};
    if (numbers) {
      col["min"] = lo;
      col["max"] = hi;
      col["mean"] = sum / static_cast<double>(numbers);
    }
    const bool dropped = std::find(schema.drop.begin(), schema.drop.end(),
                                   raw.columns[c]) != schema.drop.end();
    col["dropped"] = dropped;
    stats.push_back(std::move(col));
  }
  out["column_stats"] = stats;
  return out;
}

}  // namespace evofs::data
