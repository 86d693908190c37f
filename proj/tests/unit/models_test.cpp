#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "poslink/error.hpp"
#include "poslink/models/model.hpp"
#include "poslink/random.hpp"

#include "support/oracles.hpp"

using namespace poslink;
using namespace poslink::models;

namespace {

FeatureMatrix matrix(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
  FeatureMatrix m;
  for (std::size_t c = 0; c < rows.front().size(); ++c) m.feature_names.push_back("f" + std::to_string(c));
  for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  m.labels = labels;
  return m;
}

// Rows with a few distinct values per column so ties are common, labels
// from a noisy linear rule.
FeatureMatrix random_matrix(Rng& rng, std::size_t n, std::size_t d, bool coarse) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t c = 0; c < d; ++c) {
      rows[i][c] = coarse ? static_cast<double>(rng.index(5)) : rng.normal();
      s += (c % 2 == 0 ? 1.0 : -0.5) * rows[i][c];
    }
    labels[i] = s + rng.normal() * 0.5 > (coarse ? 1.0 : 0.0) ? 1 : 0;
  }
  if (std::count(labels.begin(), labels.end(), 1) == 0) labels[0] = 1;
  if (std::count(labels.begin(), labels.end(), 0) == 0) labels[0] = 0;
  return matrix(rows, labels);
}

std::vector<std::vector<double>> rows_of(const FeatureMatrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
  return out;
}

ClassifierSpec quick_spec(std::string_view kind) {
  std::vector<std::string> overrides;
  if (kind == "random_forest" || kind == "extra_trees") overrides = {"n_estimators=15"};
  if (kind == "gbt") overrides = {"n_estimators=20"};
  if (kind == "mlp") overrides = {"epochs=3", "units_1=16", "units_2=8", "units_3=4", "batch_size=16"};
  return ClassifierSpec::make(kind, overrides, 7);
}

const std::vector<std::string_view> kAllKinds = {"logistic", "knn", "decision_tree", "random_forest",
                                                 "extra_trees", "gbt", "mlp", "linear_svm"};

std::string saved(const TrainedModel& m) {
  std::ostringstream out;
  save_model(m, out);
  return out.str();
}

class ThreadsEnv {
 public:
  explicit ThreadsEnv(const char* value) {
    if (const char* old = std::getenv("POSLINK_THREADS")) saved_ = old;
    ::setenv("POSLINK_THREADS", value, 1);
  }
  ~ThreadsEnv() {
    if (saved_) {
      ::setenv("POSLINK_THREADS", saved_->c_str(), 1);
    } else {
      ::unsetenv("POSLINK_THREADS");
    }
  }

 private:
  std::optional<std::string> saved_;
};

}  // namespace

TEST(Train, TwoPointTreeMemorizes) {
  const auto m = train(ClassifierSpec::make("decision_tree"), matrix({{0}, {1}}, {0, 1}));
  EXPECT_EQ(m.predict(std::vector<double>{0}), 0);
  EXPECT_EQ(m.predict(std::vector<double>{1}), 1);
}

TEST(Train, EnsembleSizesFollowParameters) {
  Rng rng(1);
  const auto data = random_matrix(rng, 60, 4, false);
  const auto rf = train(ClassifierSpec::make("random_forest"), data);
  EXPECT_EQ(std::get<ForestModel>(rf.state).trees().size(), 150u);
  const auto gbt = train(ClassifierSpec::make("gbt"), data);
  EXPECT_EQ(std::get<GbtModel>(gbt.state).rounds(), 250u);
  const auto xgb = train(ClassifierSpec::make("xgboost"), data);
  EXPECT_EQ(std::get<GbtModel>(xgb.state).rounds(), 250u);
}

TEST(Train, RejectsBadInput) {
  const auto spec = ClassifierSpec::make("logistic");
  EXPECT_THROW(train(spec, matrix({{0}}, {1})), DataError);
  EXPECT_THROW(train(spec, matrix({{0}, {1}}, {1, 1})), DataError);
  EXPECT_THROW(train(spec, matrix({{0}, {NAN}}, {0, 1})), DataError);
  EXPECT_THROW(train(spec, matrix({{0}, {INFINITY}}, {0, 1})), DataError);
  EXPECT_THROW(train(spec, matrix({{0}, {1}}, {0, 2})), DataError);
  auto unlabeled = matrix({{0}, {1}}, {0, 1});
  unlabeled.labels.reset();
  EXPECT_THROW(train(spec, unlabeled), DataError);
  FeatureMatrix empty;
  empty.labels.emplace();
  EXPECT_THROW(train(spec, empty), DataError);
}

TEST(PredictProba, InUnitIntervalForEveryKind) {
  Rng rng(2);
  const auto data = random_matrix(rng, 80, 5, false);
  const auto probe = random_matrix(rng, 50, 5, false);
  for (auto kind : kAllKinds) {
    const auto m = train(quick_spec(kind), data);
    for (double p : m.predict_proba_all(probe)) {
      EXPECT_GE(p, 0.0) << kind;
      EXPECT_LE(p, 1.0) << kind;
    }
  }
}

TEST(PredictProba, WidthAndColumnChecks) {
  const auto m = train(ClassifierSpec::make("decision_tree"), matrix({{0, 1}, {1, 0}}, {0, 1}));
  EXPECT_THROW(m.predict_proba(std::vector<double>{0}), UsageError);
  EXPECT_THROW(m.predict(std::vector<double>{0, 1, 2}), UsageError);
  auto other = matrix({{0, 1}}, {0});
  other.feature_names = {"f1", "f0"};
  EXPECT_THROW(m.predict_all(other), DataError);
}

TEST(Knn, VoteFraction) {
  const auto m = train(ClassifierSpec::make("knn"), matrix({{0}, {1}, {2}, {10}, {11}}, {0, 0, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(m.predict_proba(std::vector<double>{0.5}), 1.0 / 3.0);
  EXPECT_EQ(m.predict(std::vector<double>{0.5}), 0);
  EXPECT_EQ(m.predict(std::vector<double>{10.5}), 1);
}

TEST(Knn, EvenVoteGoesToZero) {
  const std::vector<std::string> k2 = {"n_neighbors=2"};
  const auto m = train(ClassifierSpec::make("knn", k2), matrix({{0}, {1}, {5}}, {0, 1, 1}));
  EXPECT_EQ(m.predict_proba(std::vector<double>{0.5}), 0.5);
  EXPECT_EQ(m.predict(std::vector<double>{0.5}), 0);
}

TEST(Knn, MatchesExhaustiveOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto data = random_matrix(rng, 30, 3, trial % 2 == 0);
    const auto m = train(ClassifierSpec::make("knn"), data);
    const auto queries = random_matrix(rng, 20, 3, trial % 2 == 0);
    const auto train_rows = rows_of(data);
    for (const auto& q : rows_of(queries)) {
      EXPECT_EQ(m.predict(q), oracle::knn_predict(train_rows, *data.labels, q, 3)) << "trial " << trial;
    }
    for (const auto& q : train_rows) EXPECT_EQ(m.predict(q), oracle::knn_predict(train_rows, *data.labels, q, 3));
  }
}

TEST(Tree, SingleClassIsConstantLeaf) {
  const auto m = train(ClassifierSpec::make("decision_tree"), matrix({{0}, {3}, {7}}, {1, 1, 1}));
  EXPECT_EQ(std::get<DecisionTreeModel>(m.state).tree().nodes().size(), 1u);
  EXPECT_EQ(m.predict_proba(std::vector<double>{100}), 1.0);
}

TEST(Predict, ThresholdIsInclusive) {
  // A constant feature cannot be split, so the tree is one leaf holding the
  // label-1 fraction.
  const auto p06 = train(ClassifierSpec::make("decision_tree"), matrix({{1}, {1}, {1}, {1}, {1}}, {1, 1, 1, 0, 0}));
  EXPECT_DOUBLE_EQ(p06.predict_proba(std::vector<double>{1}), 0.6);
  EXPECT_EQ(p06.predict(std::vector<double>{1}), 1);
  const auto p05 = train(ClassifierSpec::make("decision_tree"), matrix({{1}, {1}}, {1, 0}));
  EXPECT_EQ(p05.predict_proba(std::vector<double>{1}), 0.5);
  EXPECT_EQ(p05.predict(std::vector<double>{1}), 1);
  std::vector<std::vector<double>> rows(100, {1.0});
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 49; ++i) labels[i] = 1;
  const auto p049 = train(ClassifierSpec::make("decision_tree"), matrix(rows, labels));
  EXPECT_DOUBLE_EQ(p049.predict_proba(std::vector<double>{1}), 0.49);
  EXPECT_EQ(p049.predict(std::vector<double>{1}), 0);
  EXPECT_EQ(p06.predict(std::vector<double>{1}, 0.7), 0);
}

TEST(Cart, RootSplitMatchesBruteForce) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto data = random_matrix(rng, 20, 3, trial % 2 == 0);
    const auto m = train(ClassifierSpec::make("decision_tree"), data);
    const auto expect = oracle::best_gini_split(rows_of(data), *data.labels);
    ASSERT_TRUE(expect.has_value());
    const auto& root = std::get<DecisionTreeModel>(m.state).tree().nodes().front();
    EXPECT_EQ(root.feature, static_cast<int>(expect->feature)) << "trial " << trial;
    EXPECT_EQ(root.threshold, expect->threshold) << "trial " << trial;
  }
}

TEST(Cart, MemorizesContradictionFreeData) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto data = random_matrix(rng, 60, 3, false);
    const auto m = train(ClassifierSpec::make("decision_tree"), data);
    EXPECT_EQ(m.predict_all(data), *data.labels);
  }
}

TEST(Cart, SeparatesXor) {
  const auto data = matrix({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
  const auto m = train(ClassifierSpec::make("decision_tree"), data);
  EXPECT_EQ(m.predict_all(data), *data.labels);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  // Batches are drawn from seeds 1, 2, ... and the first whose +-step stencil
  // stays off every relu kink is checked.
  const std::vector<std::size_t> sizes = {10, 128, 64, 32, 1};
  const std::vector<int> y = {1, 0, 0, 1, 1};
  const std::vector<std::size_t> rows = {0, 1, 2, 3, 4};
  std::optional<double> err;
  std::uint64_t seed = 0;
  while (!err && seed < 20) {
    Rng rng(++seed);
    std::vector<double> x(5 * 10);
    for (auto& v : x) v = rng.normal();
    Mlp net(sizes, rng);
    std::vector<double> grad;
    net.loss_and_gradient(DataView{x, 10}, y, rows, grad);
    const auto p = net.parameters();
    EXPECT_NEAR(oracle::mlp_loss(p, sizes, x, y), net.loss_and_gradient(DataView{x, 10}, y, rows, grad), 1e-12);
    err = oracle::mlp_gradient_error({p.begin(), p.end()}, sizes, x, y, grad, 1e-4);
  }
  ASSERT_TRUE(err.has_value());
  EXPECT_LE(*err, 1e-4) << "seed " << seed;
}

TEST(Mlp, SmallNetworkGradients) {
  const std::vector<std::size_t> sizes = {3, 4, 1};
  const std::vector<double> x = {0.5, -1.0, 2.0, 1.5, 0.25, -0.75};
  const std::vector<int> y = {1, 0};
  const std::vector<std::size_t> rows = {0, 1};
  Rng rng(3);
  Mlp net(sizes, rng);
  std::vector<double> grad;
  net.loss_and_gradient(DataView{x, 3}, y, rows, grad);
  const auto p = net.parameters();
  const auto err = oracle::mlp_gradient_error({p.begin(), p.end()}, sizes, x, y, grad, 1e-4);
  ASSERT_TRUE(err.has_value());
  EXPECT_LE(*err, 1e-6);
}

TEST(Mlp, FitsSeparableData) {
  Rng rng(7);
  const auto data = random_matrix(rng, 200, 4, false);
  const auto spec = ClassifierSpec::make("mlp", std::vector<std::string>{"epochs=60", "batch_size=32"});
  const auto m = train(spec, data);
  const auto pred = m.predict_all(data);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == (*data.labels)[i];
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(pred.size()), 0.85);
}

TEST(Forest, IndependentOfThreadCount) {
  Rng rng(8);
  const auto data = random_matrix(rng, 120, 6, false);
  for (auto kind : {"random_forest", "extra_trees"}) {
    std::string one, four;
    {
      ThreadsEnv env("1");
      one = saved(train(ClassifierSpec::make(kind), data));
    }
    {
      ThreadsEnv env("4");
      four = saved(train(ClassifierSpec::make(kind), data));
    }
    EXPECT_EQ(one, four) << kind;
  }
}

TEST(Linear, MonotoneInStrongestFeature) {
  Rng rng(9);
  const auto data = random_matrix(rng, 150, 4, false);
  for (auto kind : {"logistic", "linear_svm"}) {
    const auto m = train(ClassifierSpec::make(kind), data);
    const auto w = std::visit(
        [](const auto& s) -> std::vector<double> {
          if constexpr (std::is_base_of_v<LinearScorer, std::decay_t<decltype(s)>>) {
            return s.raw_weights();
          } else {
            return {};
          }
        },
        m.state);
    ASSERT_EQ(w.size(), 4u);
    const auto top = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
    for (const auto& base : rows_of(data)) {
      auto row = base;
      double prev = m.predict_proba(row);
      for (int step = 0; step < 20; ++step) {
        row[top] += 0.5;
        const double p = m.predict_proba(row);
        EXPECT_GE(p, prev) << kind;
        prev = p;
      }
    }
  }
}

TEST(Gbt, TrainingLossNeverIncreases) {
  Rng rng(10);
  for (auto coarse : {false, true}) {
    const auto data = random_matrix(rng, 150, 4, coarse);
    std::vector<double> trace;
    GbtModel::fit(DataView{data.values, data.cols()}, *data.labels, ClassifierSpec::make("gbt"), &trace);
    ASSERT_EQ(trace.size(), 251u);
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]) << "round " << i;
  }
}

TEST(ModelFile, RoundTripIsBitExact) {
  Rng rng(11);
  const auto data = random_matrix(rng, 100, 5, false);
  const auto probe = random_matrix(rng, 100, 5, false);
  for (auto kind : kAllKinds) {
    auto m = train(quick_spec(kind), data);
    m.metadata["mode"] = "min";
    const auto text = saved(m);
    std::istringstream in(text);
    const auto back = load_model(in);
    EXPECT_EQ(back.spec.kind, m.spec.kind);
    EXPECT_EQ(back.spec.params, m.spec.params);
    EXPECT_EQ(back.spec.seed, m.spec.seed);
    EXPECT_EQ(back.feature_names, m.feature_names);
    EXPECT_EQ(back.metadata, m.metadata);
    EXPECT_EQ(back.predict_proba_all(probe), m.predict_proba_all(probe)) << kind;
    EXPECT_EQ(saved(back), text) << kind;
  }
}

TEST(ModelFile, RejectsWrongKindAndDamage) {
  Rng rng(12);
  const auto data = random_matrix(rng, 40, 3, false);
  const auto text = saved(train(quick_spec("random_forest"), data));
  {
    std::istringstream in(text);
    EXPECT_THROW(load_model(in, ModelKind::Logistic), DataError);
  }
  {
    std::istringstream in(text.substr(0, text.size() / 2));
    EXPECT_THROW(load_model(in), DataError);
  }
  {
    std::string v = text;
    v.replace(v.find("v1"), 2, "v2");
    std::istringstream in(v);
    EXPECT_THROW(load_model(in), DataError);
  }
  {
    // A forest body under a logistic header does not parse.
    std::string v = text;
    v.replace(v.find("random_forest"), 13, "logistic");
    std::istringstream in(v);
    EXPECT_THROW(load_model(in), DataError);
  }
  {
    std::istringstream in("hello world\n");
    EXPECT_THROW(load_model(in), DataError);
  }
}

TEST(Spec, ParsingAndValidation) {
  EXPECT_EQ(ClassifierSpec::make("knn").param("n_neighbors"), 3);
  const auto lgb = ClassifierSpec::make("lightgbm");
  EXPECT_EQ(lgb.kind, ModelKind::Gbt);
  EXPECT_EQ(lgb.param("eta"), 0.1);
  EXPECT_EQ(lgb.param("n_estimators"), 100);
  EXPECT_EQ(lgb.param("max_depth"), 6);
  EXPECT_EQ(ClassifierSpec::make("gbt").param("eta"), 0.5);
  EXPECT_EQ(ClassifierSpec::make("gbt").param("max_depth"), 40);
  const auto mlp = ClassifierSpec::make("mlp");
  EXPECT_EQ(mlp.param("units_1"), 128);
  EXPECT_EQ(mlp.param("batch_size"), 256);
  EXPECT_THROW(ClassifierSpec::make("svm"), UsageError);
  EXPECT_THROW(ClassifierSpec::make("knn", std::vector<std::string>{"k=3"}), UsageError);
  EXPECT_THROW(ClassifierSpec::make("knn", std::vector<std::string>{"n_neighbors"}), UsageError);
  EXPECT_THROW(ClassifierSpec::make("knn", std::vector<std::string>{"n_neighbors=2.5"}), UsageError);
  EXPECT_THROW(ClassifierSpec::make("knn", std::vector<std::string>{"n_neighbors=0"}), UsageError);
  EXPECT_THROW(ClassifierSpec::make("logistic", std::vector<std::string>{"learning_rate=nan"}), UsageError);
  EXPECT_EQ(ClassifierSpec::make("knn", std::vector<std::string>{"n_neighbors=5"}).param("n_neighbors"), 5);
}

TEST(Train, DeterministicForFixedSeed) {
  Rng rng(13);
  const auto data = random_matrix(rng, 80, 4, false);
  for (auto kind : kAllKinds) EXPECT_EQ(saved(train(quick_spec(kind), data)), saved(train(quick_spec(kind), data)));
}
