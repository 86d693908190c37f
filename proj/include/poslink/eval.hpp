#pragma once

// Train/validation splitting, metrics, model comparison and submission files.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "poslink/error.hpp"
#include "poslink/features.hpp"
#include "poslink/io.hpp"
#include "poslink/models/model.hpp"
#include "poslink/random.hpp"

namespace poslink {

struct DataSplit {
  FeatureMatrix train;
  FeatureMatrix valid;
  std::vector<std::size_t> train_rows;  // indices into the input matrix
  std::vector<std::size_t> valid_rows;
};

// Stratified split. Each label group is shuffled with the seeded generator and
// contributes round(group * fraction) rows to validation; the remainder from
// rounding is handed out by largest fractional part so the total is
// round(n * fraction). Row order on each side follows the input order.
inline DataSplit train_valid_split(const FeatureMatrix& matrix, double valid_fraction, std::uint64_t seed) {
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) throw UsageError("validation fraction must lie in (0, 1)");
  const std::size_t n = matrix.rows();
  if (n < 2) throw DataError("splitting needs at least 2 rows");
  const auto n_valid = static_cast<std::size_t>(std::llround(static_cast<double>(n) * valid_fraction));
  if (n_valid == 0 || n_valid == n) {
    throw UsageError("validation fraction " + io::format_real(valid_fraction) + " leaves one side of a " +
                     std::to_string(n) + "-row split empty");
  }

  std::vector<std::vector<std::size_t>> groups(matrix.labeled() ? 2 : 1);
  for (std::size_t i = 0; i < n; ++i) groups[matrix.labeled() ? (*matrix.labels)[i] : 0].push_back(i);

  // Largest-remainder quotas per group.
  std::vector<std::size_t> quota(groups.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double exact = static_cast<double>(groups[g].size()) * static_cast<double>(n_valid) / static_cast<double>(n);
    quota[g] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[g];
    remainders.emplace_back(exact - std::floor(exact), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n_valid && i < remainders.size(); ++i) {
    const auto g = remainders[i].second;
    if (quota[g] < groups[g].size()) {
      ++quota[g];
      ++assigned;
    }
  }

  Rng rng(seed);
  std::vector<char> in_valid(n, 0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    rng.shuffle(groups[g]);
    for (std::size_t i = 0; i < quota[g]; ++i) in_valid[groups[g][i]] = 1;
  }

  DataSplit s;
  for (std::size_t i = 0; i < n; ++i) (in_valid[i] ? s.valid_rows : s.train_rows).push_back(i);
  s.train = matrix.select_rows(s.train_rows);
  s.valid = matrix.select_rows(s.valid_rows);
  return s;
}

namespace detail {

inline void check_binary(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw UsageError("predictions and labels differ in length (" + std::to_string(predictions.size()) + " vs " +
                     std::to_string(labels.size()) + ")");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((predictions[i] != 0 && predictions[i] != 1) || (labels[i] != 0 && labels[i] != 1)) {
      throw UsageError("predictions and labels must be 0 or 1");
    }
  }
}

}  // namespace detail

// F1 of the positive class. 0 when precision + recall is 0.
inline double f1_score(std::span<const int> predictions, std::span<const int> labels) {
  detail::check_binary(predictions, labels);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    tp += predictions[i] == 1 && labels[i] == 1;
    fp += predictions[i] == 1 && labels[i] == 0;
    fn += predictions[i] == 0 && labels[i] == 1;
  }
  // 2PR/(P+R) simplifies to 2TP/(2TP+FP+FN), which avoids rounding in P and R.
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

inline double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  detail::check_binary(predictions, labels);
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

struct EvalRow {
  std::string model;
  double accuracy = 0.0;
  double f1 = 0.0;
  double train_seconds = 0.0;
  double predict_seconds = 0.0;
  std::optional<std::string> error;
};

struct EvalReport {
  std::vector<EvalRow> rows;

  // Timings are left out by default so that reports are reproducible byte for byte.
  void write_csv(std::ostream& out, bool timings = false) const {
    out << "model,accuracy,f1" << (timings ? ",train_seconds,predict_seconds" : "") << ",error\n";
    for (const auto& r : rows) {
      out << r.model << ',' << io::format_real(r.accuracy) << ',' << io::format_real(r.f1);
      if (timings) out << ',' << io::format_real(r.train_seconds) << ',' << io::format_real(r.predict_seconds);
      out << ',' << csv_field(r.error.value_or("")) << '\n';
    }
  }

  void write_csv(const std::filesystem::path& path, bool timings = false) const {
    auto out = io::open_output(path);
    write_csv(out, timings);
    io::finish_output(out, path);
  }

  void write_table(std::ostream& out, bool timings = true) const {
    std::size_t name_w = 5;
    for (const auto& r : rows) name_w = std::max(name_w, r.model.size());
    out << std::left << std::setw(static_cast<int>(name_w)) << "model" << std::right << std::setw(11) << "accuracy"
        << std::setw(11) << "f1";
    if (timings) out << std::setw(10) << "train_s" << std::setw(10) << "pred_s";
    out << '\n';
    for (const auto& r : rows) {
      out << std::left << std::setw(static_cast<int>(name_w)) << r.model << std::right;
      if (r.error) {
        out << "  failed: " << *r.error << '\n';
        continue;
      }
      out << std::setw(11) << io::format_real(r.accuracy) << std::setw(11) << io::format_real(r.f1);
      if (timings) {
        out << std::fixed << std::setprecision(2) << std::setw(10) << r.train_seconds << std::setw(10)
            << r.predict_seconds << std::defaultfloat;
      }
      out << '\n';
    }
  }

 private:
  static std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }
};

struct Evaluation {
  models::TrainedModel model;
  EvalRow row;
};

inline Evaluation evaluate(const models::ClassifierSpec& spec, const FeatureMatrix& train,
                           const FeatureMatrix& valid) {
  using clock = std::chrono::steady_clock;
  if (!valid.labeled()) throw DataError("validation data has no labels");
  EvalRow row;
  row.model = spec.name.empty() ? std::string(models::to_string(spec.kind)) : spec.name;
  const auto t0 = clock::now();
  auto model = models::train(spec, train);
  const auto t1 = clock::now();
  const auto predictions = model.predict_all(valid);
  const auto t2 = clock::now();
  row.accuracy = accuracy(predictions, *valid.labels);
  row.f1 = f1_score(predictions, *valid.labels);
  row.train_seconds = std::chrono::duration<double>(t1 - t0).count();
  row.predict_seconds = std::chrono::duration<double>(t2 - t1).count();
  return {std::move(model), row};
}

// Trains and scores every spec; a failing spec is recorded in its row. Rows
// are sorted by descending F1 (failures last, input order among equals).
inline EvalReport compare_models(std::span<const models::ClassifierSpec> specs, const FeatureMatrix& train,
                                 const FeatureMatrix& valid) {
  EvalReport report;
  for (const auto& spec : specs) {
    try {
      report.rows.push_back(evaluate(spec, train, valid).row);
    } catch (const std::exception& e) {
      EvalRow row;
      row.model = spec.name.empty() ? std::string(models::to_string(spec.kind)) : spec.name;
      row.error = e.what();
      report.rows.push_back(row);
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const EvalRow& a, const EvalRow& b) {
    if (a.error.has_value() != b.error.has_value()) return !a.error.has_value();
    return a.f1 > b.f1;
  });
  return report;
}

inline void write_submission(std::span<const std::uint64_t> row_ids, std::span<const int> predictions,
                             std::ostream& out) {
  if (row_ids.size() != predictions.size()) throw UsageError("submission ids and predictions differ in length");
  out << "id,label\n";
  for (std::size_t i = 0; i < row_ids.size(); ++i) out << row_ids[i] << ',' << predictions[i] << '\n';
}

inline void write_submission(std::span<const std::uint64_t> row_ids, std::span<const int> predictions,
                             const std::filesystem::path& path) {
  if (row_ids.size() != predictions.size()) throw UsageError("submission ids and predictions differ in length");
  auto out = io::open_output(path);
  write_submission(row_ids, predictions, out);
  io::finish_output(out, path);
}

struct Submission {
  std::vector<std::uint64_t> ids;
  std::vector<int> labels;
};

inline Submission read_submission(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!io::getline_crlf(in, line) || line != "id,label") throw DataError(path.string() + ": missing id,label header");
  Submission s;
  std::size_t line_no = 1;
  while (io::getline_crlf(in, line)) {
    ++line_no;
    const auto fields = io::split(line, ',');
    auto id = fields.size() == 2 ? io::parse_int<std::uint64_t>(fields[0]) : std::nullopt;
    auto label = fields.size() == 2 ? io::parse_int<int>(fields[1]) : std::nullopt;
    if (!id || !label || (*label != 0 && *label != 1)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed submission row");
    }
    s.ids.push_back(*id);
    s.labels.push_back(*label);
  }
  return s;
}

}  // namespace poslink
