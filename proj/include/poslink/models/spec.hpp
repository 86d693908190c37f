#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poslink/error.hpp"
#include "poslink/io.hpp"

namespace poslink::models {

enum class ModelKind { Logistic, Knn, DecisionTree, RandomForest, ExtraTrees, Gbt, Mlp, LinearSvm };

inline constexpr std::pair<ModelKind, std::string_view> kKindNames[] = {
    {ModelKind::Logistic, "logistic"},         {ModelKind::Knn, "knn"},
    {ModelKind::DecisionTree, "decision_tree"}, {ModelKind::RandomForest, "random_forest"},
    {ModelKind::ExtraTrees, "extra_trees"},    {ModelKind::Gbt, "gbt"},
    {ModelKind::Mlp, "mlp"},                   {ModelKind::LinearSvm, "linear_svm"},
};

inline std::string_view to_string(ModelKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

inline ModelKind parse_model_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  throw UsageError("unknown model kind '" + std::string(text) + "'");
}

// Tree learners accept single-class training data.
inline bool tolerates_one_class(ModelKind kind) {
  return kind == ModelKind::DecisionTree || kind == ModelKind::RandomForest ||
         kind == ModelKind::ExtraTrees || kind == ModelKind::Gbt;
}

using Params = std::map<std::string, double, std::less<>>;

// Hyperparameter defaults per kind. Every key a kind accepts appears here.
inline Params default_params(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic:
      return {{"l2", 1e-4}, {"learning_rate", 0.1}, {"max_iter", 500}, {"tol", 1e-6}};
    case ModelKind::Knn:
      return {{"n_neighbors", 3}};
    case ModelKind::DecisionTree:
      return {{"max_depth", 0}, {"min_samples_split", 2}};
    case ModelKind::RandomForest:
      return {{"n_estimators", 150}, {"max_depth", 0}, {"min_samples_split", 2}, {"max_features", 0},
              {"bootstrap", 1}};
    case ModelKind::ExtraTrees:
      return {{"n_estimators", 150}, {"max_depth", 0}, {"min_samples_split", 2}, {"max_features", 0}};
    case ModelKind::Gbt:
      return {{"eta", 0.5}, {"n_estimators", 250}, {"max_depth", 40}, {"min_samples_leaf", 2}};
    case ModelKind::Mlp:
      return {{"learning_rate", 0.001}, {"beta1", 0.9},  {"beta2", 0.999},   {"epsilon", 1e-8},
              {"batch_size", 256},      {"epochs", 20},  {"units_1", 128},   {"units_2", 64},
              {"units_3", 32}};
    case ModelKind::LinearSvm:
      return {{"lambda", 1e-4}, {"epochs", 10}};
  }
  return {};
}

struct ClassifierSpec {
  ModelKind kind = ModelKind::RandomForest;
  std::string name;  // display name, defaults to the kind
  Params params;
  std::uint64_t seed = 42;

  double param(std::string_view key) const {
    auto it = params.find(key);
    if (it == params.end()) throw UsageError("no hyperparameter '" + std::string(key) + "'");
    return it->second;
  }

  std::size_t count_param(std::string_view key) const {
    const double v = param(key);
    return static_cast<std::size_t>(v);
  }

  // `kind` is a model kind or one of the presets `xgboost` (gbt with the
  // defaults above) and `lightgbm` (gbt, eta 0.1, 100 rounds, depth 6).
  // Overrides are `key=value` strings; unknown keys are rejected.
  static ClassifierSpec make(std::string_view kind, std::span<const std::string> overrides = {},
                             std::uint64_t seed = 42) {
    ClassifierSpec spec;
    spec.seed = seed;
    spec.name = std::string(kind);
    if (kind == "xgboost") {
      spec.kind = ModelKind::Gbt;
    } else if (kind == "lightgbm") {
      spec.kind = ModelKind::Gbt;
    } else {
      spec.kind = parse_model_kind(kind);
    }
    spec.params = default_params(spec.kind);
    if (kind == "lightgbm") {
      spec.params["eta"] = 0.1;
      spec.params["n_estimators"] = 100;
      spec.params["max_depth"] = 6;
    }
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("hyperparameter '" + kv + "' is not key=value");
      const std::string key = kv.substr(0, eq);
      auto it = spec.params.find(key);
      if (it == spec.params.end()) {
        throw UsageError("unknown hyperparameter '" + key + "' for " + std::string(to_string(spec.kind)));
      }
      auto value = io::parse_double(kv.substr(eq + 1));
      if (!value || !std::isfinite(*value)) throw UsageError("hyperparameter '" + key + "' needs a number");
      it->second = *value;
    }
    spec.validate();
    return spec;
  }

  void validate() const {
    const auto expect_count = [&](std::string_view key, double min) {
      const double v = param(key);
      if (v < min || v != std::floor(v)) {
        throw UsageError("hyperparameter '" + std::string(key) + "' must be an integer >= " + io::format_real(min));
      }
    };
    const auto expect_positive = [&](std::string_view key) {
      if (!(param(key) > 0.0)) throw UsageError("hyperparameter '" + std::string(key) + "' must be positive");
    };
    switch (kind) {
      case ModelKind::Logistic:
        expect_positive("learning_rate");
        expect_count("max_iter", 1);
        if (param("l2") < 0.0) throw UsageError("l2 must be non-negative");
        break;
      case ModelKind::Knn: expect_count("n_neighbors", 1); break;
      case ModelKind::DecisionTree:
        expect_count("max_depth", 0);
        expect_count("min_samples_split", 2);
        break;
      case ModelKind::RandomForest:
      case ModelKind::ExtraTrees:
        expect_count("n_estimators", 1);
        expect_count("max_depth", 0);
        expect_count("min_samples_split", 2);
        expect_count("max_features", 0);
        break;
      case ModelKind::Gbt:
        expect_positive("eta");
        expect_count("n_estimators", 1);
        expect_count("max_depth", 1);
        expect_count("min_samples_leaf", 1);
        break;
      case ModelKind::Mlp:
        expect_positive("learning_rate");
        expect_count("batch_size", 1);
        expect_count("epochs", 1);
        expect_count("units_1", 1);
        expect_count("units_2", 1);
        expect_count("units_3", 1);
        break;
      case ModelKind::LinearSvm:
        expect_positive("lambda");
        expect_count("epochs", 1);
        break;
    }
  }
};

}  // namespace poslink::models
