#pragma once

// Exploratory statistics over labeled pairs and t-test based tag selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "poslink/corpus.hpp"
#include "poslink/error.hpp"
#include "poslink/features.hpp"
#include "poslink/log.hpp"
#include "poslink/parallel.hpp"
#include "poslink/special_functions.hpp"
#include "poslink/tagset.hpp"

namespace poslink {

struct LabelCounts {
  std::size_t label0 = 0;
  std::size_t label1 = 0;
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

inline LabelCounts label_distribution(std::span<const PairExample> pairs) {
  LabelCounts counts;
  for (const auto& p : pairs) {
    if (!p.label) throw DataError("label_distribution needs labeled pairs");
    (*p.label == 1 ? counts.label1 : counts.label0)++;
  }
  return counts;
}

using TokenMap = std::unordered_map<NodeId, std::vector<std::string>>;

inline const std::vector<std::string>& tokens_for(const TokenMap& tokens, NodeId id) {
  auto it = tokens.find(id);
  if (it == tokens.end()) throw DataError("no tokens for node " + std::to_string(id));
  return it->second;
}

// Bucket lower bound -> number of label-1 pairs whose common-word count falls
// in [bound, bound + width).
inline std::map<std::size_t, std::size_t> common_word_histogram(std::span<const PairExample> pairs,
                                                                const TokenMap& tokens,
                                                                std::size_t bucket_width) {
  if (bucket_width == 0) throw UsageError("bucket width must be positive");
  std::map<std::size_t, std::size_t> hist;
  for (const auto& p : pairs) {
    if (!p.label) throw DataError("common_word_histogram needs labeled pairs");
    if (*p.label != 1) continue;
    const auto n = common_word_count(tokens_for(tokens, p.u), tokens_for(tokens, p.v));
    ++hist[n / bucket_width * bucket_width];
  }
  return hist;
}

// Per-tag totals over label-1 pairs: unweighted counts pairs where both nodes
// carry the tag, weighted sums min(count_u, count_v).
inline std::vector<std::uint64_t> tag_appearance_totals(std::span<const PairExample> pairs,
                                                        const VectorMap& vectors, std::size_t n_tags,
                                                        bool weighted) {
  std::vector<std::uint64_t> totals(n_tags, 0);
  for (const auto& p : pairs) {
    if (!p.label) throw DataError("tag_appearance_totals needs labeled pairs");
    const auto& u = vector_for(vectors, p.u);
    const auto& v = vector_for(vectors, p.v);
    if (*p.label != 1) continue;
    if (u.counts.size() != n_tags || v.counts.size() != n_tags) {
      throw DataError("count vector width does not match the tagset");
    }
    for (std::size_t t = 0; t < n_tags; ++t) {
      const auto m = std::min(u.counts[t], v.counts[t]);
      totals[t] += weighted ? m : (m > 0 ? 1 : 0);
    }
  }
  return totals;
}

struct TTest {
  double t_stat = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

enum class TTestKind { Welch, Pooled };

namespace detail {

struct SampleMoments {
  double n;
  double mean;
  double var;  // n - 1 denominator
};

inline SampleMoments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {n, mean, ss / (n - 1.0)};
}

}  // namespace detail

// Two-sample t-test, two-sided. When both samples have zero variance the
// statistic is 0 (equal means, p = 1) or a signed infinity (p = 0), with
// dof reported as n_a + n_b - 2.
inline TTest t_test(std::span<const double> a, std::span<const double> b,
                    TTestKind kind = TTestKind::Welch) {
  if (a.size() < 2 || b.size() < 2) throw UsageError("t-test needs at least 2 values per sample");
  const auto ma = detail::moments(a);
  const auto mb = detail::moments(b);
  const double diff = ma.mean - mb.mean;
  if (ma.var == 0.0 && mb.var == 0.0) {
    const double dof = ma.n + mb.n - 2.0;
    if (diff == 0.0) return {0.0, dof, 1.0};
    return {std::copysign(std::numeric_limits<double>::infinity(), diff), dof, 0.0};
  }
  TTest r;
  if (kind == TTestKind::Welch) {
    const double qa = ma.var / ma.n;
    const double qb = mb.var / mb.n;
    r.t_stat = diff / std::sqrt(qa + qb);
    r.dof = (qa + qb) * (qa + qb) / (qa * qa / (ma.n - 1.0) + qb * qb / (mb.n - 1.0));
  } else {
    r.dof = ma.n + mb.n - 2.0;
    const double pooled = ((ma.n - 1.0) * ma.var + (mb.n - 1.0) * mb.var) / r.dof;
    r.t_stat = diff / std::sqrt(pooled * (1.0 / ma.n + 1.0 / mb.n));
  }
  r.p_value = math::student_t_two_sided(r.t_stat, r.dof);
  return r;
}

inline TTest welch_t_test(std::span<const double> a, std::span<const double> b) {
  return t_test(a, b, TTestKind::Welch);
}

struct TTestResult {
  std::string tag;
  double t_stat = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
  double mean_linked = 0.0;
  double mean_unlinked = 0.0;
};

struct TagSelection {
  std::vector<std::string> selected;  // ascending p-value
  std::vector<TTestResult> report;    // every tag, tagset order
};

namespace detail {

// Per-pair min counts split by label.
inline void min_count_samples(std::span<const PairExample> pairs, const VectorMap& vectors,
                              std::size_t tag, std::vector<double>& linked,
                              std::vector<double>& unlinked) {
  linked.clear();
  unlinked.clear();
  for (const auto& p : pairs) {
    const double m = static_cast<double>(
        std::min(vector_for(vectors, p.u).counts.at(tag), vector_for(vectors, p.v).counts.at(tag)));
    (*p.label == 1 ? linked : unlinked).push_back(m);
  }
}

inline void check_groups(std::span<const PairExample> pairs) {
  const auto counts = label_distribution(pairs);
  if (counts.label0 < 2 || counts.label1 < 2) {
    throw DataError("tag selection needs at least 2 pairs per label group");
  }
}

}  // namespace detail

// Tests every tag on the per-pair min counts of linked vs unlinked pairs and
// keeps tags with p < alpha.
inline TagSelection select_tags(std::span<const PairExample> pairs, const VectorMap& vectors,
                                const TagSet& tagset, double alpha = 0.05,
                                TTestKind kind = TTestKind::Welch) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("alpha must lie in (0, 1)");
  detail::check_groups(pairs);
  for (const auto& p : pairs) {
    vector_for(vectors, p.u);
    vector_for(vectors, p.v);
  }
  TagSelection out;
  out.report.resize(tagset.size());
  parallel_for(tagset.size(), [&](std::size_t t) {
    std::vector<double> linked, unlinked;
    detail::min_count_samples(pairs, vectors, t, linked, unlinked);
    const auto r = t_test(linked, unlinked, kind);
    out.report[t] = {tagset.label(t), r.t_stat, r.dof, r.p_value,
                     detail::moments(linked).mean, detail::moments(unlinked).mean};
  });
  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < tagset.size(); ++t) {
    if (out.report[t].p_value < alpha) order.push_back(t);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return out.report[a].p_value < out.report[b].p_value;
  });
  for (auto t : order) out.selected.push_back(tagset.label(t));
  return out;
}

// One test for a whole tag set: the per-pair sample is the sum of min counts
// over the given tags.
inline TTest set_level_test(std::span<const PairExample> pairs, const VectorMap& vectors,
                            std::span<const std::size_t> tag_indices,
                            TTestKind kind = TTestKind::Welch) {
  detail::check_groups(pairs);
  std::vector<double> linked, unlinked;
  for (const auto& p : pairs) {
    const auto& u = vector_for(vectors, p.u);
    const auto& v = vector_for(vectors, p.v);
    double s = 0.0;
    for (auto t : tag_indices) s += static_cast<double>(std::min(u.counts.at(t), v.counts.at(t)));
    (*p.label == 1 ? linked : unlinked).push_back(s);
  }
  return t_test(linked, unlinked, kind);
}

// The k tags with the largest totals, descending, ties in tagset order. Tags
// with a zero total are never returned.
inline std::vector<std::string> top_k_by_weight(std::span<const std::uint64_t> totals,
                                                const TagSet& tagset, std::size_t k) {
  if (k < 1) throw UsageError("k must be at least 1");
  if (totals.size() != tagset.size()) throw UsageError("totals do not match the tagset");
  std::vector<std::size_t> idx;
  for (std::size_t t = 0; t < totals.size(); ++t) {
    if (totals[t] > 0) idx.push_back(t);
  }
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
  if (k > idx.size()) {
    warn("requested top " + std::to_string(k) + " tags but only " + std::to_string(idx.size()) +
         " have nonzero totals");
    k = idx.size();
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(tagset.label(idx[i]));
  return out;
}

}  // namespace poslink
