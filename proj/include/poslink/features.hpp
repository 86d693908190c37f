#pragma once

// Tag-count vectors per node and fixed-width feature rows per node pair.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "poslink/corpus.hpp"
#include "poslink/error.hpp"
#include "poslink/io.hpp"
#include "poslink/parallel.hpp"
#include "poslink/tagger.hpp"
#include "poslink/tagset.hpp"

namespace poslink {

struct TagCountVector {
  std::vector<std::uint64_t> counts;  // aligned to TagSet order
  std::uint64_t token_total = 0;

  friend bool operator==(const TagCountVector&, const TagCountVector&) = default;
};

using VectorMap = std::unordered_map<NodeId, TagCountVector>;

inline TagCountVector count_tags(std::span<const TaggedToken> tagged, const TagSet& tagset) {
  TagCountVector v;
  v.counts.assign(tagset.size(), 0);
  for (const auto& tok : tagged) ++v.counts[tagset.index_of(tok.tag)];
  v.token_total = tagged.size();
  return v;
}

enum class FeatureMode {
  Indicator,  // 1 when the tag occurs in both nodes
  Min,        // min(count_u, count_v)
  Sum,        // count_u + count_v when the tag occurs in both, else 0
};

inline std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::Indicator: return "indicator";
    case FeatureMode::Min: return "min";
    case FeatureMode::Sum: return "sum";
  }
  return "min";
}

inline FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "indicator") return FeatureMode::Indicator;
  if (text == "min") return FeatureMode::Min;
  if (text == "sum") return FeatureMode::Sum;
  throw UsageError("unknown feature mode '" + std::string(text) + "' (indicator|min|sum)");
}

inline std::vector<std::size_t> resolve_tags(std::span<const std::string> tags, const TagSet& tagset) {
  std::vector<std::size_t> idx;
  idx.reserve(tags.size());
  for (const auto& t : tags) idx.push_back(tagset.index_of(t));
  return idx;
}

inline double pair_feature(std::uint64_t cu, std::uint64_t cv, FeatureMode mode) {
  if (cu == 0 || cv == 0) return 0.0;
  switch (mode) {
    case FeatureMode::Indicator: return 1.0;
    case FeatureMode::Min: return static_cast<double>(std::min(cu, cv));
    case FeatureMode::Sum: return static_cast<double>(cu + cv);
  }
  return 0.0;
}

inline std::vector<double> pair_features(const TagCountVector& u, const TagCountVector& v,
                                         std::span<const std::size_t> tag_indices, FeatureMode mode) {
  if (u.counts.size() != v.counts.size()) throw DataError("count vectors use different tagsets");
  std::vector<double> out;
  out.reserve(tag_indices.size());
  for (auto t : tag_indices) {
    if (t >= u.counts.size()) throw DataError("tag index out of range for count vector");
    out.push_back(pair_feature(u.counts[t], v.counts[t], mode));
  }
  return out;
}

inline std::vector<double> pair_features(const TagCountVector& u, const TagCountVector& v,
                                         std::span<const std::string> tags, const TagSet& tagset,
                                         FeatureMode mode) {
  const auto idx = resolve_tags(tags, tagset);
  return pair_features(u, v, idx, mode);
}

// Dense row-major matrix with named columns and optional {0,1} labels.
struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<double> values;
  std::optional<std::vector<int>> labels;

  std::size_t cols() const { return feature_names.size(); }
  std::size_t rows() const { return cols() == 0 ? 0 : values.size() / cols(); }
  bool labeled() const { return labels.has_value(); }

  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols(), cols()}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * cols(), cols()}; }

  // Submatrix made of the given rows, in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> idx) const {
    FeatureMatrix out;
    out.feature_names = feature_names;
    out.values.reserve(idx.size() * cols());
    for (auto i : idx) {
      auto r = row(i);
      out.values.insert(out.values.end(), r.begin(), r.end());
    }
    if (labels) {
      out.labels.emplace();
      out.labels->reserve(idx.size());
      for (auto i : idx) out.labels->push_back((*labels)[i]);
    }
    return out;
  }

  // Keeps only the named columns, in the given order.
  FeatureMatrix select_columns(std::span<const std::string> names) const {
    std::vector<std::size_t> idx;
    for (const auto& n : names) {
      auto it = std::find(feature_names.begin(), feature_names.end(), n);
      if (it == feature_names.end()) throw DataError("no feature column '" + n + "'");
      idx.push_back(static_cast<std::size_t>(it - feature_names.begin()));
    }
    FeatureMatrix out;
    out.feature_names.assign(names.begin(), names.end());
    out.labels = labels;
    out.values.reserve(rows() * idx.size());
    for (std::size_t r = 0; r < rows(); ++r) {
      for (auto c : idx) out.values.push_back(values[r * cols() + c]);
    }
    return out;
  }
};

struct PairKey {
  NodeId a;
  NodeId b;
  // Unordered pair.
  static PairKey of(NodeId u, NodeId v) { return u < v ? PairKey{u, v} : PairKey{v, u}; }
  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

using CommonWordMap = std::map<PairKey, std::size_t>;

inline constexpr std::string_view kCommonWordsColumn = "common_words";

inline const TagCountVector& vector_for(const VectorMap& vectors, NodeId id) {
  auto it = vectors.find(id);
  if (it == vectors.end()) throw DataError("no tag-count vector for node " + std::to_string(id));
  return it->second;
}

inline FeatureMatrix build_dataset(std::span<const PairExample> pairs, const VectorMap& vectors,
                                   std::span<const std::string> tags, const TagSet& tagset,
                                   FeatureMode mode, bool include_common_words = false,
                                   const CommonWordMap* common_words = nullptr) {
  if (include_common_words && common_words == nullptr) {
    throw UsageError("common-word column requested without common-word counts");
  }
  const auto idx = resolve_tags(tags, tagset);
  FeatureMatrix m;
  m.feature_names.assign(tags.begin(), tags.end());
  if (include_common_words) m.feature_names.emplace_back(kCommonWordsColumn);
  const std::size_t width = m.feature_names.size();
  m.values.assign(pairs.size() * width, 0.0);

  // Validate up front so errors name the first offending pair deterministically.
  for (const auto& p : pairs) {
    vector_for(vectors, p.u);
    vector_for(vectors, p.v);
    if (include_common_words && !common_words->contains(PairKey::of(p.u, p.v))) {
      throw DataError("no common-word count for pair (" + std::to_string(p.u) + "," +
                      std::to_string(p.v) + ")");
    }
  }
  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& p = pairs[i];
    const auto f = pair_features(vectors.at(p.u), vectors.at(p.v), idx, mode);
    std::copy(f.begin(), f.end(), m.values.begin() + static_cast<std::ptrdiff_t>(i * width));
    if (include_common_words) {
      m.values[i * width + width - 1] = static_cast<double>(common_words->at(PairKey::of(p.u, p.v)));
    }
  });

  bool any_labeled = false, all_labeled = true;
  for (const auto& p : pairs) {
    any_labeled = any_labeled || p.label.has_value();
    all_labeled = all_labeled && p.label.has_value();
  }
  if (any_labeled && !all_labeled) throw DataError("pairs mix labeled and unlabeled rows");
  if (all_labeled && !pairs.empty()) {
    m.labels.emplace();
    for (const auto& p : pairs) m.labels->push_back(*p.label);
  }
  return m;
}

// CSV with a header of feature names (plus `label` when labeled).
inline void write_feature_csv(const FeatureMatrix& m, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m.feature_names[c];
  if (m.labeled()) out << (m.cols() ? "," : "") << "label";
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << io::format_real(row[c]);
    if (m.labeled()) out << (m.cols() ? "," : "") << (*m.labels)[r];
    out << '\n';
  }
  io::finish_output(out, path);
}

inline FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!io::getline_crlf(in, line)) throw DataError(path.string() + ": empty feature file");
  FeatureMatrix m;
  for (auto name : io::split(line, ',')) m.feature_names.emplace_back(name);
  const bool labeled = !m.feature_names.empty() && m.feature_names.back() == "label";
  if (labeled) {
    m.feature_names.pop_back();
    m.labels.emplace();
  }
  std::size_t line_no = 1;
  while (io::getline_crlf(in, line)) {
    ++line_no;
    const auto fields = io::split(line, ',');
    if (fields.size() != m.cols() + (labeled ? 1 : 0)) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": wrong field count");
    }
    for (std::size_t c = 0; c < m.cols(); ++c) {
      auto v = io::parse_double(fields[c]);
      if (!v) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad number");
      m.values.push_back(*v);
    }
    if (labeled) {
      auto l = io::parse_int<int>(fields.back());
      if (!l || (*l != 0 && *l != 1)) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad label");
      m.labels->push_back(*l);
    }
  }
  return m;
}

// Per-node vectors as CSV: `id,<tag>,<tag>,...` in tagset order.
inline void write_vectors_csv(const std::vector<std::pair<NodeId, TagCountVector>>& vectors,
                              const TagSet& tagset, const std::filesystem::path& path) {
  auto out = io::open_output(path);
  out << "id";
  for (const auto& t : tagset.labels()) out << ',' << t;
  out << '\n';
  for (const auto& [id, v] : vectors) {
    out << id;
    for (auto c : v.counts) out << ',' << c;
    out << '\n';
  }
  io::finish_output(out, path);
}

struct VectorTable {
  TagSet tagset;
  std::vector<NodeId> order;  // file order
  VectorMap vectors;
};

inline VectorTable read_vectors_csv(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::string line;
  if (!io::getline_crlf(in, line)) throw DataError(path.string() + ": empty vectors file");
  auto header = io::split(line, ',');
  if (header.size() < 2 || header[0] != "id") throw DataError(path.string() + ": bad vectors header");
  VectorTable table{TagSet(std::vector<std::string>(header.begin() + 1, header.end())), {}, {}};
  std::size_t line_no = 1;
  while (io::getline_crlf(in, line)) {
    ++line_no;
    const auto fields = io::split(line, ',');
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != header.size()) throw DataError(where + ": wrong field count");
    auto id = io::parse_int<NodeId>(fields[0]);
    if (!id) throw DataError(where + ": bad node id");
    TagCountVector v;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto n = io::parse_int<std::uint64_t>(fields[c]);
      if (!n) throw DataError(where + ": bad count");
      v.counts.push_back(*n);
      v.token_total += *n;
    }
    if (!table.vectors.emplace(*id, std::move(v)).second) {
      throw DataError(where + ": duplicate node id " + std::to_string(*id));
    }
    table.order.push_back(*id);
  }
  return table;
}

}  // namespace poslink
