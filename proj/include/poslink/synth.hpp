#pragma once

// Planted-link benchmark: nodes belong to hidden topics, each topic has its
// own part-of-speech mix and its own vocabulary, and a pair is linked exactly
// when both nodes share a topic. The tag mix is the only signal the features
// can see, so the benchmark measures how well tag-count features recover it.

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "poslink/corpus.hpp"
#include "poslink/error.hpp"
#include "poslink/eval.hpp"
#include "poslink/features.hpp"
#include "poslink/io.hpp"
#include "poslink/random.hpp"
#include "poslink/tagger.hpp"

namespace poslink::synth {

struct Config {
  std::size_t nodes = 300;
  std::size_t min_tokens = 40;
  std::size_t max_tokens = 120;
  std::size_t train_pairs = 3000;
  std::size_t test_pairs = 600;
  std::size_t topics = 8;
  double linked_fraction = 0.46;
  double dominant_share = 0.25;   // extra mass on one open-class tag per topic
  double secondary_share = 0.10;  // and on a second one
  std::size_t words_per_tag = 12;
  std::uint64_t seed = 42;
};

struct Benchmark {
  std::vector<Node> nodes;
  std::vector<std::size_t> topic;  // per node
  std::vector<PairExample> train;  // labeled
  std::vector<PairExample> test;   // unlabeled, row ids 0..n-1
  std::vector<int> test_labels;
};

// Open-class tags get topic vocabularies; closed-class tags draw from the
// fixed function-word lists the fallback tagger knows.
inline constexpr std::array<std::string_view, 7> kOpenTags = {"NN", "NNS", "VBG", "VBD", "JJ", "RB", "CD"};
inline constexpr std::array<std::string_view, 6> kClosedTags = {"DT", "IN", "CC", "PRP", "MD", "TO"};

inline const std::vector<std::string>& closed_words(std::string_view tag) {
  static const std::vector<std::vector<std::string>> words = {
      {"the", "a", "an"}, {"of", "in", "on", "at", "by"}, {"and", "or", "but"},
      {"he", "she", "it", "they", "we"}, {"can", "will", "may", "must", "should"}, {"to"}};
  for (std::size_t i = 0; i < kClosedTags.size(); ++i) {
    if (kClosedTags[i] == tag) return words[i];
  }
  throw UsageError("no closed-class word list for " + std::string(tag));
}

namespace detail {

inline std::string make_stem(Rng& rng) {
  static constexpr std::string_view consonants = "bcdfghjkmnprtvz";
  static constexpr std::string_view vowels = "aeiou";
  std::string stem;
  const std::size_t syllables = 2 + rng.index(2);
  for (std::size_t i = 0; i < syllables; ++i) {
    stem += consonants[rng.index(consonants.size())];
    stem += vowels[rng.index(vowels.size())];
  }
  stem += consonants[rng.index(consonants.size())];
  return stem;
}

inline std::string inflect(std::string_view tag, const std::string& stem, Rng& rng) {
  if (tag == "NN") return stem;
  if (tag == "NNS") return stem + "s";
  if (tag == "VBG") return stem + "ing";
  if (tag == "VBD") return stem + "ed";
  if (tag == "RB") return stem + "ly";
  if (tag == "JJ") {
    static constexpr std::array<std::string_view, 3> suffixes = {"ous", "ful", "able"};
    return stem + std::string(suffixes[rng.index(suffixes.size())]);
  }
  // CD
  return std::to_string(10 + rng.index(99990));
}

// A word the fallback tagger assigns to `tag`, distinct from every word
// handed out so far.
inline std::string fresh_word(std::string_view tag, Rng& rng, std::unordered_set<std::string>& used) {
  for (;;) {
    auto word = inflect(tag, make_stem(rng), rng);
    if (fallback_tag_word(word) == tag && used.insert(word).second) return word;
  }
}

inline std::string render(const std::vector<std::string>& tokens, Rng& rng) {
  // Punctuation and capitals give the cleaner something to undo.
  std::string raw;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) raw += ' ';
    const double r = rng.uniform();
    if (r < 0.03) {
      raw += "| ";
    } else if (r < 0.05) {
      raw += '{';
    }
    std::string word = tokens[i];
    if (rng.uniform() < 0.08 && !word.empty()) word[0] = static_cast<char>(std::toupper(word[0]));
    raw += word;
    if (rng.uniform() < 0.07) raw += rng.uniform() < 0.5 ? "." : ",";
  }
  return raw;
}

}  // namespace detail

// Tag distribution of one topic over kOpenTags followed by kClosedTags.
inline std::vector<double> topic_profile(const Config& cfg, std::size_t k) {
  const std::size_t n_open = kOpenTags.size();
  std::vector<double> p(n_open + kClosedTags.size(), 0.0);
  const std::size_t dominant = k % n_open;
  std::size_t secondary = (k * 3 + 1) % n_open;
  if (secondary == dominant) secondary = (secondary + 1) % n_open;
  const double rest = 1.0 - cfg.dominant_share - cfg.secondary_share;
  for (std::size_t t = 0; t < n_open; ++t) p[t] = rest * 0.4 / static_cast<double>(n_open);
  for (std::size_t t = n_open; t < p.size(); ++t) p[t] = rest * 0.6 / static_cast<double>(kClosedTags.size());
  p[dominant] += cfg.dominant_share;
  p[secondary] += cfg.secondary_share;
  return p;
}

inline Benchmark make_benchmark(const Config& cfg) {
  if (cfg.nodes < 2 * cfg.topics || cfg.topics < 2) throw UsageError("benchmark needs 2+ topics and 2+ nodes per topic");
  if (cfg.min_tokens == 0 || cfg.min_tokens > cfg.max_tokens) throw UsageError("bad token length range");
  if (cfg.dominant_share + cfg.secondary_share >= 1.0 || cfg.dominant_share < 0 || cfg.secondary_share < 0) {
    throw UsageError("topic shares must be non-negative and sum below 1");
  }
  if (!(cfg.linked_fraction > 0.0 && cfg.linked_fraction < 1.0)) throw UsageError("linked fraction must lie in (0, 1)");
  const std::size_t max_pairs = cfg.nodes * (cfg.nodes - 1) / 4;
  if (cfg.train_pairs + cfg.test_pairs > max_pairs) throw UsageError("too many pairs for the node count");

  Rng rng(cfg.seed);
  std::unordered_set<std::string> used;
  for (auto tag : kClosedTags) used.insert(closed_words(tag).begin(), closed_words(tag).end());

  // vocab[k][t]: words of open tag t in topic k
  std::vector<std::vector<std::vector<std::string>>> vocab(cfg.topics);
  for (auto& topic : vocab) {
    for (auto tag : kOpenTags) {
      auto& pool = topic.emplace_back();
      for (std::size_t i = 0; i < cfg.words_per_tag; ++i) pool.push_back(detail::fresh_word(tag, rng, used));
    }
  }
  std::vector<std::vector<double>> cumulative;
  for (std::size_t k = 0; k < cfg.topics; ++k) {
    auto p = topic_profile(cfg, k);
    for (std::size_t t = 1; t < p.size(); ++t) p[t] += p[t - 1];
    cumulative.push_back(std::move(p));
  }

  Benchmark b;
  b.topic.resize(cfg.nodes);
  for (std::size_t i = 0; i < cfg.nodes; ++i) b.topic[i] = i % cfg.topics;
  rng.shuffle(b.topic);
  std::vector<std::vector<std::size_t>> members(cfg.topics);
  for (std::size_t i = 0; i < cfg.nodes; ++i) members[b.topic[i]].push_back(i);

  for (std::size_t i = 0; i < cfg.nodes; ++i) {
    const std::size_t k = b.topic[i];
    const std::size_t len = cfg.min_tokens + rng.index(cfg.max_tokens - cfg.min_tokens + 1);
    std::vector<std::string> tokens;
    tokens.reserve(len);
    for (std::size_t j = 0; j < len; ++j) {
      const double r = rng.uniform();
      std::size_t t = 0;
      while (t + 1 < cumulative[k].size() && r >= cumulative[k][t]) ++t;
      if (t < kOpenTags.size()) {
        const auto& pool = vocab[k][t];
        tokens.push_back(pool[rng.index(pool.size())]);
      } else {
        const auto& pool = closed_words(kClosedTags[t - kOpenTags.size()]);
        tokens.push_back(pool[rng.index(pool.size())]);
      }
    }
    Node node;
    node.id = i;
    node.raw_text = detail::render(tokens, rng);
    node.clean_text = clean_text(node.raw_text);
    b.nodes.push_back(std::move(node));
  }

  std::set<PairKey> seen;
  const auto draw_pair = [&](int& label) {
    for (;;) {
      const std::size_t u = rng.index(cfg.nodes);
      const auto& same = members[b.topic[u]];
      std::size_t v;
      if (rng.uniform() < cfg.linked_fraction) {
        label = 1;
        v = same[rng.index(same.size())];
        if (v == u) continue;
      } else {
        label = 0;
        v = rng.index(cfg.nodes);
        if (b.topic[v] == b.topic[u]) continue;
      }
      if (seen.insert(PairKey::of(u, v)).second) return PairExample{u, v, std::nullopt, std::nullopt};
    }
  };
  for (std::size_t i = 0; i < cfg.train_pairs; ++i) {
    int label;
    auto p = draw_pair(label);
    p.label = label;
    b.train.push_back(p);
  }
  for (std::size_t i = 0; i < cfg.test_pairs; ++i) {
    int label;
    auto p = draw_pair(label);
    p.row_id = i;
    b.test.push_back(p);
    b.test_labels.push_back(label);
  }
  return b;
}

// nodes.tsv, train.csv (source,target,label), test.csv (id,source,target) and
// test_labels.csv (id,label).
inline void write_benchmark(const Benchmark& b, const std::filesystem::path& dir) {
  {
    const auto path = dir / "nodes.tsv";
    auto out = io::open_output(path);
    write_nodes(out, b.nodes);
    io::finish_output(out, path);
  }
  {
    const auto path = dir / "train.csv";
    auto out = io::open_output(path);
    out << "source,target,label\n";
    for (const auto& p : b.train) out << p.u << ',' << p.v << ',' << *p.label << '\n';
    io::finish_output(out, path);
  }
  {
    const auto path = dir / "test.csv";
    auto out = io::open_output(path);
    out << "id,source,target\n";
    for (const auto& p : b.test) out << *p.row_id << ',' << p.u << ',' << p.v << '\n';
    io::finish_output(out, path);
  }
  std::vector<std::uint64_t> ids;
  for (const auto& p : b.test) ids.push_back(*p.row_id);
  write_submission(ids, b.test_labels, dir / "test_labels.csv");
}

}  // namespace poslink::synth
