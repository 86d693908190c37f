#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "poslink/error.hpp"
#include "poslink/log.hpp"
#include "poslink/random.hpp"
#include "poslink/report.hpp"
#include "poslink/special_functions.hpp"
#include "poslink/stats.hpp"

#include "support/oracles.hpp"
#include "support/paths.hpp"

using namespace poslink;

namespace {

std::vector<double> random_sample(Rng& rng, std::size_t n, double mean, double sd) {
  std::vector<double> x(n);
  for (auto& v : x) v = mean + sd * rng.normal();
  return x;
}

PairExample labeled(NodeId u, NodeId v, int label) { return {u, v, label, std::nullopt}; }

}  // namespace

TEST(SpecialFunctions, IncompleteBetaIdentities) {
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) EXPECT_NEAR(math::incomplete_beta(1, 1, x), x, 1e-15);
  for (double a : {0.5, 2.0, 7.5, 40.0}) EXPECT_NEAR(math::incomplete_beta(a, a, 0.5), 0.5, 1e-13);
  for (double x : {0.05, 0.3, 0.77}) {
    EXPECT_NEAR(math::incomplete_beta(2.5, 4, x), 1 - math::incomplete_beta(4, 2.5, 1 - x), 1e-13);
    // I_x(a, 1) = x^a
    EXPECT_NEAR(math::incomplete_beta(3.5, 1, x), std::pow(x, 3.5), 1e-14);
  }
}

TEST(SpecialFunctions, StudentTClosedForms) {
  for (double t : {0.0, 0.3, 1.0, 2.5, 10.0, 300.0}) {
    // One degree of freedom is Cauchy, two has an algebraic CDF.
    EXPECT_NEAR(math::student_t_two_sided(t, 1), 1 - 2 * std::atan(t) / std::numbers::pi, 1e-13);
    EXPECT_NEAR(math::student_t_two_sided(-t, 2), 1 - t / std::sqrt(2 + t * t), 1e-13);
  }
  EXPECT_EQ(math::student_t_two_sided(std::numeric_limits<double>::infinity(), 5), 0.0);
}

TEST(WelchTTest, WorkedExample) {
  const std::vector<double> a = {1, 2, 3}, b = {2, 3, 4};
  const auto r = welch_t_test(a, b);
  EXPECT_NEAR(r.t_stat, -1.224744871391589, 1e-12);
  EXPECT_DOUBLE_EQ(r.dof, 4.0);
  EXPECT_NEAR(r.p_value, oracle::student_two_sided_p(r.t_stat, 4), 1e-9);
  EXPECT_NEAR(r.p_value, 0.288, 5e-4);
}

TEST(WelchTTest, IdenticalSamplesAndSwap) {
  const std::vector<double> a = {1, 4, 2, 8}, b = {3, 3, 5, 9, 1};
  const auto same = welch_t_test(a, a);
  EXPECT_EQ(same.t_stat, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  const auto ab = welch_t_test(a, b), ba = welch_t_test(b, a);
  EXPECT_EQ(ab.t_stat, -ba.t_stat);
  EXPECT_EQ(ab.dof, ba.dof);
  EXPECT_EQ(ab.p_value, ba.p_value);
}

TEST(WelchTTest, DegenerateAndErrors) {
  const std::vector<double> c1 = {2, 2, 2}, c2 = {2, 2}, c3 = {5, 5, 5, 5};
  const auto eq = welch_t_test(c1, c2);
  EXPECT_EQ(eq.t_stat, 0.0);
  EXPECT_EQ(eq.dof, 3.0);
  EXPECT_EQ(eq.p_value, 1.0);
  const auto ne = welch_t_test(c1, c3);
  EXPECT_EQ(ne.t_stat, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(ne.dof, 5.0);
  EXPECT_EQ(ne.p_value, 0.0);
  const std::vector<double> one = {1};
  EXPECT_THROW(welch_t_test(one, c1), UsageError);
}

TEST(WelchTTest, MatchesOracleOnRandomSamples) {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_sample(rng, 2 + rng.index(49), rng.uniform(-2, 2), rng.uniform(0.2, 3));
    const auto b = random_sample(rng, 2 + rng.index(49), rng.uniform(-2, 2), rng.uniform(0.2, 3));
    const auto r = welch_t_test(a, b);
    const auto hand = oracle::welch(a, b);
    EXPECT_NEAR(r.t_stat, hand.t, 1e-12 * std::abs(hand.t)) << trial;
    EXPECT_NEAR(r.dof, hand.dof, 1e-12 * hand.dof) << trial;
    EXPECT_NEAR(r.p_value, oracle::student_two_sided_p(hand.t, hand.dof), 1e-9) << trial;
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
  }
}

TEST(PooledTTest, EqualSizesAgreeWithWelchStatistic) {
  const std::vector<double> a = {1, 2, 3}, b = {2, 3, 4};
  const auto r = t_test(a, b, TTestKind::Pooled);
  EXPECT_NEAR(r.t_stat, -1.224744871391589, 1e-12);
  EXPECT_EQ(r.dof, 4.0);
}

TEST(LabelDistribution, Examples) {
  EXPECT_EQ(label_distribution(std::vector<PairExample>{}), (LabelCounts{0, 0}));
  const std::vector<PairExample> p = {labeled(1, 2, 1), labeled(1, 3, 1), labeled(2, 3, 0)};
  EXPECT_EQ(label_distribution(p), (LabelCounts{1, 2}));
  const std::vector<PairExample> unl = {{1, 2, std::nullopt, 0}};
  EXPECT_THROW(label_distribution(unl), DataError);
}

TEST(CommonWordHistogram, Examples) {
  TokenMap tokens = {{1, {"a", "b", "c", "d", "e", "x"}}, {2, {"a", "b", "c", "d", "e", "y"}}, {3, {"z"}}};
  const std::vector<PairExample> one = {labeled(1, 2, 1), labeled(1, 3, 0)};
  EXPECT_EQ(common_word_histogram(one, tokens, 10), (std::map<std::size_t, std::size_t>{{0, 1}}));
  EXPECT_EQ(common_word_histogram(one, tokens, 2), (std::map<std::size_t, std::size_t>{{4, 1}}));
  const std::vector<PairExample> zeros = {labeled(1, 2, 0)};
  EXPECT_TRUE(common_word_histogram(zeros, tokens, 3).empty());
  EXPECT_THROW(common_word_histogram(one, tokens, 0), UsageError);

  const std::vector<PairExample> many = {labeled(1, 2, 1), labeled(2, 3, 1), labeled(1, 3, 1), labeled(3, 1, 0)};
  std::size_t sum = 0;
  for (const auto& [lo, n] : common_word_histogram(many, tokens, 2)) sum += n;
  EXPECT_EQ(sum, 3u);
}

TEST(TagTotals, Examples) {
  const TagSet ts;
  const auto nn = ts.index_of("NN");
  VectorMap vm;
  vm[1].counts.assign(ts.size(), 0);
  vm[2].counts.assign(ts.size(), 0);
  vm[1].counts[nn] = 3;
  vm[2].counts[nn] = 2;
  const std::vector<PairExample> p = {labeled(1, 2, 1)};
  EXPECT_EQ(tag_appearance_totals(p, vm, ts.size(), false)[nn], 1u);
  EXPECT_EQ(tag_appearance_totals(p, vm, ts.size(), true)[nn], 2u);
  const std::vector<PairExample> zero = {labeled(1, 2, 0)};
  for (auto t : tag_appearance_totals(zero, vm, ts.size(), true)) EXPECT_EQ(t, 0u);
  const std::vector<PairExample> missing = {labeled(1, 7, 1)};
  EXPECT_THROW(tag_appearance_totals(missing, vm, ts.size(), true), DataError);
}

TEST(TagTotals, WeightedDominatesWhenAllCountsPositive) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    VectorMap vm;
    for (NodeId id = 0; id < 6; ++id) {
      for (int t = 0; t < 4; ++t) vm[id].counts.push_back(1 + rng.index(5));
    }
    std::vector<PairExample> pairs;
    for (int i = 0; i < 8; ++i) {
      const NodeId u = rng.index(6);
      const NodeId v = (u + 1 + rng.index(5)) % 6;
      pairs.push_back(labeled(u, v, static_cast<int>(rng.index(2))));
    }
    const auto w = tag_appearance_totals(pairs, vm, 4, true);
    const auto uw = tag_appearance_totals(pairs, vm, 4, false);
    for (int t = 0; t < 4; ++t) EXPECT_GE(w[t], uw[t]);
  }
}

namespace {

// Nodes 0..79: the first 40 are NN/VB-rich. Linked pairs join two rich nodes,
// unlinked pairs join two plain ones. DT, IN and JJ are drawn the same way
// for every node.
struct PlantedSignal {
  TagSet ts;
  VectorMap vectors;
  std::vector<PairExample> pairs;

  // With `mirrored`, node id+40 copies the noise tags of node id and every
  // unlinked pair is a linked pair shifted by 40, so only NN and VB differ
  // between the groups. Otherwise the noise is drawn per node and can differ
  // by chance, since pairs share nodes.
  explicit PlantedSignal(std::uint64_t seed, bool mirrored = true) {
    Rng rng(seed);
    for (NodeId id = 0; id < 80; ++id) {
      auto& v = vectors[id];
      v.counts.assign(ts.size(), 0);
      const bool rich = id < 40;
      v.counts[ts.index_of("NN")] = rich ? 8 + rng.index(6) : rng.index(4);
      v.counts[ts.index_of("VB")] = rich ? 6 + rng.index(6) : rng.index(3);
      for (const char* t : {"DT", "IN", "JJ"}) {
        const auto k = ts.index_of(t);
        v.counts[k] = mirrored && !rich ? vectors[id - 40].counts[k] : rng.index(6);
      }
    }
    for (int i = 0; i < 100; ++i) {
      const NodeId u = rng.index(40);
      NodeId v = rng.index(40);
      if (v == u) v = (u + 1) % 40;
      pairs.push_back(labeled(u, v, 1));
      if (mirrored) {
        pairs.push_back(labeled(u + 40, v + 40, 0));
      } else {
        const NodeId a = 40 + rng.index(40);
        NodeId b = 40 + rng.index(40);
        if (b == a) b = 40 + (a - 40 + 1) % 40;
        pairs.push_back(labeled(a, b, 0));
      }
    }
  }
};

}  // namespace

TEST(SelectTags, RecoversPlantedTags) {
  const PlantedSignal data(99);
  const auto sel = select_tags(data.pairs, data.vectors, data.ts, 0.05);
  EXPECT_EQ(sel.selected, (std::vector<std::string>{"NN", "VB"}));

  // Cross-check every tag against the hand formulas and the integrated tail.
  std::vector<std::string> oracle_selected;
  for (std::size_t t = 0; t < data.ts.size(); ++t) {
    std::vector<double> linked, unlinked;
    for (const auto& p : data.pairs) {
      const double m = static_cast<double>(std::min(data.vectors.at(p.u).counts[t], data.vectors.at(p.v).counts[t]));
      (*p.label == 1 ? linked : unlinked).push_back(m);
    }
    const auto& row = sel.report[t];
    EXPECT_EQ(row.tag, data.ts.label(t));
    const auto hand = oracle::welch(linked, unlinked);
    if (std::isfinite(hand.t)) {
      EXPECT_NEAR(row.t_stat, hand.t, 1e-12 * std::abs(hand.t));
      const double p = oracle::student_two_sided_p(hand.t, hand.dof);
      EXPECT_NEAR(row.p_value, p, 1e-9);
      if (p < 0.05) oracle_selected.push_back(data.ts.label(t));
    }
  }
  std::sort(oracle_selected.begin(), oracle_selected.end());
  EXPECT_EQ(oracle_selected, (std::vector<std::string>{"NN", "VB"}));
}

TEST(SelectTags, MonotoneInAlphaAndOrderedByP) {
  const PlantedSignal data(5, false);
  std::vector<std::string> previous;
  for (double alpha : {1e-12, 1e-6, 0.01, 0.05, 0.2, 0.5, 0.9, 0.9999}) {
    const auto sel = select_tags(data.pairs, data.vectors, data.ts, alpha);
    for (const auto& t : previous) {
      EXPECT_NE(std::find(sel.selected.begin(), sel.selected.end(), t), sel.selected.end()) << t << " at " << alpha;
    }
    for (std::size_t i = 1; i < sel.selected.size(); ++i) {
      EXPECT_LE(sel.report[data.ts.index_of(sel.selected[i - 1])].p_value,
                sel.report[data.ts.index_of(sel.selected[i])].p_value);
    }
    previous = sel.selected;
  }
  // At alpha near 1 every tag with a computable, non-degenerate test is in.
  EXPECT_EQ(previous.size(), 5u);
}

TEST(SelectTags, Errors) {
  const PlantedSignal data(1);
  EXPECT_THROW(select_tags(data.pairs, data.vectors, data.ts, 0.0), UsageError);
  EXPECT_THROW(select_tags(data.pairs, data.vectors, data.ts, 1.0), UsageError);
  const std::vector<PairExample> few = {labeled(0, 1, 1), labeled(2, 3, 1), labeled(40, 41, 0)};
  EXPECT_THROW(select_tags(few, data.vectors, data.ts, 0.05), DataError);
}

TEST(SetLevelTest, PlantedTagsSignificant) {
  const PlantedSignal data(99);
  const std::vector<std::size_t> planted = {data.ts.index_of("NN"), data.ts.index_of("VB")};
  EXPECT_LT(set_level_test(data.pairs, data.vectors, planted).p_value, 1e-6);
}

TEST(TopK, Examples) {
  const TagSet ts(std::vector<std::string>{"DT", "NN", "VB"});
  const std::vector<std::uint64_t> totals = {5, 10, 5};
  EXPECT_EQ(top_k_by_weight(totals, ts, 2), (std::vector<std::string>{"NN", "DT"}));
  EXPECT_EQ(top_k_by_weight(totals, ts, 1), (std::vector<std::string>{"NN"}));
  EXPECT_EQ(top_k_by_weight(totals, ts, 3), (std::vector<std::string>{"NN", "DT", "VB"}));
  EXPECT_THROW(top_k_by_weight(totals, ts, 0), UsageError);
}

TEST(TopK, WarnsWhenFewerNonzeroTags) {
  const TagSet ts(std::vector<std::string>{"DT", "NN", "VB"});
  const std::vector<std::uint64_t> totals = {0, 4, 1};
  std::vector<std::string> warnings;
  const auto saved = warning_sink();
  set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  const auto got = top_k_by_weight(totals, ts, 3);
  set_warning_sink(saved);
  EXPECT_EQ(got, (std::vector<std::string>{"NN", "VB"}));
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Reports, TTestCsvAndSvg) {
  const PlantedSignal data(99);
  const auto sel = select_tags(data.pairs, data.vectors, data.ts, 0.05);
  const auto dir = scratch_dir("reports");
  report::write_ttest_csv(sel.report, dir / "t.csv");
  const auto csv = io::read_file(dir / "t.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "tag,t_stat,dof,p_value,mean_linked,mean_unlinked");
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), data.ts.size() + 1);

  const std::vector<report::Bar> bars = {{"<a&b>", 3}, {"NN", 10}};
  report::write_bar_chart_svg(bars, "Title \"q\"", "x", "y", dir / "c.svg");
  const auto svg = io::read_file(dir / "c.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("&lt;a&amp;b&gt;"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '"') % 2, 0);
}
