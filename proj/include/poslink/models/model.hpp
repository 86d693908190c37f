#pragma once

// One contract over every learner: train, predict_proba, predict, save, load.

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "poslink/error.hpp"
#include "poslink/features.hpp"
#include "poslink/io.hpp"
#include "poslink/models/ensemble.hpp"
#include "poslink/models/knn.hpp"
#include "poslink/models/linear.hpp"
#include "poslink/models/mlp.hpp"
#include "poslink/models/serial.hpp"
#include "poslink/models/spec.hpp"

namespace poslink::models {

inline constexpr std::string_view kModelMagic = "POSLINK-MODEL";
inline constexpr int kModelVersion = 1;

using ModelState = std::variant<LogisticModel, KnnModel, DecisionTreeModel, ForestModel, GbtModel, MlpModel, SvmModel>;

struct TrainedModel {
  ClassifierSpec spec;
  std::vector<std::string> feature_names;
  // Free-form string metadata carried through save/load (feature mode, tag
  // selection and the like).
  std::map<std::string, std::string> metadata;
  ModelState state;

  std::size_t width() const { return feature_names.size(); }

  double predict_proba(std::span<const double> row) const {
    if (row.size() != width()) {
      throw UsageError("row has " + std::to_string(row.size()) + " features, model expects " +
                       std::to_string(width()));
    }
    return std::visit([&](const auto& m) { return m.predict_proba(row); }, state);
  }

  // 1 iff the probability reaches the threshold. A KNN vote that splits
  // exactly at 0.5 goes to label 0.
  int predict(std::span<const double> row, double threshold = 0.5) const {
    const double p = predict_proba(row);
    if (spec.kind == ModelKind::Knn && p == 0.5) return 0;
    return p >= threshold ? 1 : 0;
  }

  std::vector<double> predict_proba_all(const FeatureMatrix& m) const {
    check_columns(m);
    std::vector<double> out(m.rows());
    parallel_for(m.rows(), [&](std::size_t i) { out[i] = predict_proba(m.row(i)); });
    return out;
  }

  std::vector<int> predict_all(const FeatureMatrix& m, double threshold = 0.5) const {
    check_columns(m);
    std::vector<int> out(m.rows());
    parallel_for(m.rows(), [&](std::size_t i) { out[i] = predict(m.row(i), threshold); });
    return out;
  }

  void check_columns(const FeatureMatrix& m) const {
    if (m.feature_names != feature_names) {
      throw DataError("feature columns do not match the model's (" + std::to_string(m.cols()) + " vs " +
                      std::to_string(width()) + ")");
    }
  }
};

inline TrainedModel train(const ClassifierSpec& spec, const FeatureMatrix& matrix) {
  spec.validate();
  if (!matrix.labeled()) throw DataError("training data has no labels");
  if (matrix.cols() == 0) throw DataError("training data has no feature columns");
  if (matrix.values.size() != matrix.rows() * matrix.cols() || matrix.labels->size() != matrix.rows()) {
    throw DataError("training data shape is inconsistent");
  }
  if (matrix.rows() < 2) throw DataError("training needs at least 2 rows");
  for (double v : matrix.values) {
    if (!std::isfinite(v)) throw DataError("training data contains a non-finite value");
  }
  const auto& labels = *matrix.labels;
  std::size_t ones = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
    ones += static_cast<std::size_t>(y);
  }
  if ((ones == 0 || ones == labels.size()) && !tolerates_one_class(spec.kind)) {
    throw DataError(std::string(to_string(spec.kind)) + " needs both labels in the training data");
  }

  const DataView data{matrix.values, matrix.cols()};
  TrainedModel model{spec, matrix.feature_names, {}, LogisticModel{}};
  switch (spec.kind) {
    case ModelKind::Logistic: model.state = LogisticModel::fit(data, labels, spec); break;
    case ModelKind::Knn: model.state = KnnModel::fit(data, labels, spec); break;
    case ModelKind::DecisionTree: model.state = DecisionTreeModel::fit(data, labels, spec); break;
    case ModelKind::RandomForest:
    case ModelKind::ExtraTrees: model.state = ForestModel::fit(data, labels, spec); break;
    case ModelKind::Gbt: model.state = GbtModel::fit(data, labels, spec); break;
    case ModelKind::Mlp: model.state = MlpModel::fit(data, labels, spec); break;
    case ModelKind::LinearSvm: model.state = SvmModel::fit(data, labels, spec); break;
  }
  return model;
}

namespace detail {

// Names and values are written as single tokens; reject anything that would
// not survive that.
inline void check_token(std::string_view s, std::string_view what) {
  if (s.empty()) throw UsageError(std::string(what) + " must not be empty");
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      throw UsageError(std::string(what) + " '" + std::string(s) + "' contains whitespace");
    }
  }
}

}  // namespace detail

inline void save_model(const TrainedModel& model, std::ostream& out) {
  serial::Writer w(out);
  w.key(kModelMagic).put(std::string("v") + std::to_string(kModelVersion));
  w.key("kind").put(to_string(model.spec.kind));
  detail::check_token(model.spec.name, "model name");
  w.key("name").put(model.spec.name);
  w.key("seed").put(std::to_string(model.spec.seed));
  w.key("params").put(model.spec.params.size());
  for (const auto& [k, v] : model.spec.params) w.put(k).put(v);
  w.key("features").put(model.feature_names.size());
  for (const auto& f : model.feature_names) {
    detail::check_token(f, "feature name");
    w.put(f);
  }
  w.key("meta").put(model.metadata.size());
  for (const auto& [k, v] : model.metadata) {
    detail::check_token(k, "metadata key");
    detail::check_token(v, "metadata value");
    w.put(k).put(v);
  }
  w.key("state");
  std::visit([&](const auto& m) { m.save(w); }, model.state);
  w.key("end");
  w.finish();
}

inline void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  save_model(model, out);
  io::finish_output(out, path);
}

inline TrainedModel load_model(std::istream& in, std::optional<ModelKind> expected = std::nullopt) {
  serial::Reader r(in);
  const auto magic = r.token();
  if (magic != kModelMagic) throw DataError("not a model file");
  const auto version = r.token();
  if (version != "v" + std::to_string(kModelVersion)) throw DataError("unsupported model file version " + version);

  r.expect("kind");
  const auto kind_name = r.token();
  ModelKind kind;
  try {
    kind = parse_model_kind(kind_name);
  } catch (const UsageError&) {
    throw DataError("model file has unknown kind '" + kind_name + "'");
  }
  if (expected && *expected != kind) {
    throw DataError("model file holds a " + kind_name + " model, expected " + std::string(to_string(*expected)));
  }

  TrainedModel model{{}, {}, {}, LogisticModel{}};
  model.spec.kind = kind;
  r.expect("name");
  model.spec.name = r.token();
  r.expect("seed");
  model.spec.seed = r.integer<std::uint64_t>();
  r.expect("params");
  const auto n_params = r.integer();
  for (std::size_t i = 0; i < n_params; ++i) {
    auto key = r.token();
    model.spec.params[key] = r.real();
  }
  if (model.spec.params.size() != default_params(kind).size()) {
    throw DataError("model file hyperparameters do not match its kind");
  }
  for (const auto& [k, v] : default_params(kind)) {
    if (!model.spec.params.contains(k)) throw DataError("model file lacks hyperparameter " + k);
  }
  r.expect("features");
  const auto n_features = r.integer();
  if (n_features == 0 || n_features > 1'000'000) throw DataError("model file: bad feature count");
  model.feature_names.resize(n_features);
  for (auto& f : model.feature_names) f = r.token();
  r.expect("meta");
  const auto n_meta = r.integer();
  for (std::size_t i = 0; i < n_meta; ++i) {
    auto key = r.token();
    model.metadata[key] = r.token();
  }

  r.expect("state");
  switch (kind) {
    case ModelKind::Logistic: model.state = LogisticModel::load(r, n_features); break;
    case ModelKind::Knn: model.state = KnnModel::load(r, n_features); break;
    case ModelKind::DecisionTree: model.state = DecisionTreeModel::load(r, n_features); break;
    case ModelKind::RandomForest:
    case ModelKind::ExtraTrees: model.state = ForestModel::load(r, n_features); break;
    case ModelKind::Gbt: model.state = GbtModel::load(r, n_features); break;
    case ModelKind::Mlp: model.state = MlpModel::load(r, n_features); break;
    case ModelKind::LinearSvm: model.state = SvmModel::load(r, n_features); break;
  }
  r.expect("end");
  return model;
}

inline TrainedModel load_model(const std::filesystem::path& path, std::optional<ModelKind> expected = std::nullopt) {
  auto in = io::open_input(path);
  try {
    return load_model(in, expected);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace poslink::models
