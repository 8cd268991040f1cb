#include "evofs/metrics.hpp"

#include <sstream>

#include "evofs/error.hpp"

namespace evofs::metrics {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
  return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

const char* averaging_name(Averaging a) {
  return a == Averaging::kMacro ? "macro" : "weighted";
}

}  // namespace

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t sum = 0;
  for (auto v : counts_) sum += v;
  return sum;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < n_; ++i) sum += counts_[i * n_ + i];
  return sum;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw Error(ErrorKind::kUsage, "ConfusionMatrix: size mismatch");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

nlohmann::json ConfusionMatrix::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < n_; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < n_; ++p) row.push_back(at(t, p));
    rows.push_back(std::move(row));
  }
  return rows;
}

ConfusionMatrix ConfusionMatrix::from_json(const nlohmann::json& j) {
  ConfusionMatrix cm(j.size());
  for (std::size_t t = 0; t < j.size(); ++t) {
    if (j[t].size() != j.size()) {
      throw Error(ErrorKind::kParse, "confusion matrix JSON is not square");
    }
    for (std::size_t p = 0; p < j.size(); ++p) cm.at(t, p) = j[t][p].get<std::uint64_t>();
  }
  return cm;
}

std::string ConfusionMatrix::to_csv(std::span<const std::string> class_names) const {
  auto name = [&](std::size_t i) {
    return i < class_names.size() ? class_names[i] : std::to_string(i);
  };
  std::ostringstream out;
  out << "true\\predicted";
  for (std::size_t p = 0; p < n_; ++p) out << ',' << name(p);
  out << '\n';
  for (std::size_t t = 0; t < n_; ++t) {
    out << name(t);
    for (std::size_t p = 0; p < n_; ++p) out << ',' << at(t, p);
    out << '\n';
  }
  return out.str();
}

ConfusionMatrix confusion_matrix(std::span<const Label> truth,
                                 std::span<const Label> predicted,
                                 std::size_t n_classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorKind::kUsage, "confusion_matrix: label vectors differ in length");
  }
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Label t = truth[i];
    const Label p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
        static_cast<std::size_t>(p) >= n_classes) {
      throw Error(ErrorKind::kUsage, "confusion_matrix: label out of range at position " +
                                         std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

Metrics scores(const ConfusionMatrix& cm, Averaging averaging) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error(ErrorKind::kMetrics, "scores: confusion matrix is empty");
  const std::size_t n = cm.n_classes();

  Metrics m;
  m.averaging = averaging;
  m.accuracy = ratio(cm.trace(), total);
  m.per_class.resize(n);
  std::vector<std::uint64_t> support(n, 0);
  for (std::size_t c = 0; c < n; ++c) {
    ClassScores& s = m.per_class[c];
    std::uint64_t predicted_c = 0;
    for (std::size_t o = 0; o < n; ++o) {
      support[c] += cm.at(c, o);
      predicted_c += cm.at(o, c);
    }
    s.tp = cm.at(c, c);
    s.fn = support[c] - s.tp;
    s.fp = predicted_c - s.tp;
    s.tn = total - s.tp - s.fn - s.fp;
    s.precision = ratio(s.tp, s.tp + s.fp);
    s.recall = ratio(s.tp, s.tp + s.fn);
    s.f1 = harmonic_mean(s.precision, s.recall);
    s.fpr = ratio(s.fp, s.fp + s.tn);
    s.fnr = ratio(s.fn, s.fn + s.tp);
  }

  for (std::size_t c = 0; c < n; ++c) {
    const double w = averaging == Averaging::kMacro
                         ? 1.0 / static_cast<double>(n)
                         : ratio(support[c], total);
    const ClassScores& s = m.per_class[c];
    m.precision += w * s.precision;
    m.recall += w * s.recall;
    m.f1 += w * s.f1;
    m.fpr += w * s.fpr;
    m.fnr += w * s.fnr;
  }
  return m;
}

nlohmann::json Metrics::to_json(bool include_timings) const {
  nlohmann::json j;
  j["averaging"] = averaging_name(averaging);
  j["accuracy"] = accuracy;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["fpr"] = fpr;
  j["fnr"] = fnr;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& s : per_class) {
    classes.push_back({{"tp", s.tp},
                       {"tn", s.tn},
                       {"fp", s.fp},
                       {"fn", s.fn},
                       {"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"fpr", s.fpr},
                       {"fnr", s.fnr}});
  }
  j["per_class"] = classes;
  if (include_timings) {
    j["train_time"] = train_time;
    j["test_time"] = test_time;
  }
  return j;
}

}  // namespace evofs::metrics
