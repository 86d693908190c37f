#pragma once

// Greedy averaged-perceptron part-of-speech tagger and a suffix-rule fallback.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "poslink/error.hpp"
#include "poslink/io.hpp"
#include "poslink/random.hpp"
#include "poslink/tagset.hpp"
#include "poslink/unicode.hpp"

namespace poslink {

struct TaggedToken {
  std::string word;
  std::string tag;
  friend bool operator==(const TaggedToken&, const TaggedToken&) = default;
};

using TaggedSentence = std::vector<TaggedToken>;

struct TaggerConfig {
  // A word enters the unambiguous lexicon when seen at least this often...
  std::size_t lexicon_min_count = 20;
  // ...with at least this fraction of its occurrences carrying one tag.
  double lexicon_min_purity = 0.97;
};

namespace detail {

inline constexpr std::string_view kStart = "-START-";
inline constexpr std::string_view kEnd = "-END-";

inline bool all_digits(std::string_view word) {
  if (word.empty()) return false;
  for (std::size_t pos = 0; pos < word.size();) {
    if (!unicode::is_digit(unicode::decode_next(word, pos))) return false;
  }
  return true;
}

inline bool has_digit(std::string_view word) {
  for (std::size_t pos = 0; pos < word.size();) {
    if (unicode::is_digit(unicode::decode_next(word, pos))) return true;
  }
  return false;
}

// The feature template. Changing it invalidates every saved model.
inline std::vector<std::string> tagger_features(std::string_view word, std::string_view prev_tag,
                                                std::string_view prev_word,
                                                std::string_view next_word) {
  std::vector<std::string> f;
  f.reserve(11);
  const auto add = [&f](std::string_view key, std::string_view value) {
    std::string s;
    s.reserve(key.size() + 1 + value.size());
    s.append(key).push_back(' ');
    s.append(value);
    f.push_back(std::move(s));
  };
  f.emplace_back("bias");
  add("w", word);
  add("s1", unicode::suffix(word, 1));
  add("s2", unicode::suffix(word, 2));
  add("s3", unicode::suffix(word, 3));
  if (all_digits(word)) f.emplace_back("digits");
  if (has_digit(word)) f.emplace_back("hasdigit");
  add("pt", prev_tag);
  add("pw", prev_word);
  add("nw", next_word);
  std::string conj(prev_tag);
  conj.push_back(' ');
  conj.append(word);
  add("ptw", conj);
  return f;
}

}  // namespace detail

class PerceptronTagger {
 public:
  PerceptronTagger() = default;

  static PerceptronTagger train(std::span<const TaggedSentence> sentences, int epochs,
                                std::uint64_t seed, TagSet tagset = TagSet::penn_treebank(),
                                const TaggerConfig& config = {});

  // One tag per input token, decoded greedily left to right.
  std::vector<TaggedToken> tag(std::span<const std::string> tokens) const;

  void save(const std::filesystem::path& path) const;
  static PerceptronTagger load(const std::filesystem::path& path);

  bool trained() const { return trained_; }
  const TagSet& tagset() const { return tagset_; }
  std::size_t feature_count() const { return weights_.size(); }
  std::size_t lexicon_size() const { return lexicon_.size(); }

 private:
  std::size_t predict(const std::vector<std::string>& features) const {
    std::vector<double> scores(tagset_.size(), 0.0);
    for (const auto& f : features) {
      auto it = weights_.find(f);
      if (it == weights_.end()) continue;
      for (std::size_t t = 0; t < scores.size(); ++t) scores[t] += it->second[t];
    }
    // First maximum wins, so ties resolve in tagset order.
    return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  }

  TagSet tagset_;
  std::unordered_map<std::string, std::vector<double>> weights_;
  std::unordered_map<std::string, std::size_t> lexicon_;
  bool trained_ = false;
};

namespace detail {

// Weight with the bookkeeping needed to average it lazily.
struct AveragedParam {
  double weight = 0.0;
  double total = 0.0;
  std::int64_t stamp = 0;

  void add(double delta, std::int64_t now) {
    total += static_cast<double>(now - stamp) * weight;
    stamp = now;
    weight += delta;
  }
};

}  // namespace detail

inline PerceptronTagger PerceptronTagger::train(std::span<const TaggedSentence> sentences,
                                                int epochs, std::uint64_t seed, TagSet tagset,
                                                const TaggerConfig& config) {
  if (sentences.empty()) throw UsageError("cannot train a tagger on an empty corpus");
  if (epochs < 1) throw UsageError("epochs must be at least 1");

  PerceptronTagger tagger;
  tagger.tagset_ = std::move(tagset);
  const std::size_t n_tags = tagger.tagset_.size();

  // Gold tags as indices; also the counts for the unambiguous lexicon.
  std::vector<std::vector<std::size_t>> gold(sentences.size());
  std::map<std::string, std::vector<std::size_t>> word_tag_counts;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    for (const auto& tok : sentences[s]) {
      auto idx = tagger.tagset_.find(tok.tag);
      if (!idx) throw DataError("unknown gold tag '" + tok.tag + "' for word '" + tok.word + "'");
      gold[s].push_back(*idx);
      auto& counts = word_tag_counts[tok.word];
      if (counts.empty()) counts.assign(n_tags, 0);
      ++counts[*idx];
    }
  }
  for (const auto& [word, counts] : word_tag_counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    const auto best = std::max_element(counts.begin(), counts.end());
    if (total >= config.lexicon_min_count &&
        static_cast<double>(*best) / static_cast<double>(total) >= config.lexicon_min_purity) {
      tagger.lexicon_.emplace(word, static_cast<std::size_t>(best - counts.begin()));
    }
  }

  std::unordered_map<std::string, std::vector<detail::AveragedParam>> params;
  std::int64_t instances = 0;
  // Returns the predicted tag and the tag to penalize: the prediction when it
  // is wrong, otherwise the best other tag if it ties with the gold one.
  const auto score = [&](const std::vector<std::string>& features, std::size_t truth) {
    std::vector<double> scores(n_tags, 0.0);
    for (const auto& f : features) {
      auto it = params.find(f);
      if (it == params.end()) continue;
      for (std::size_t t = 0; t < n_tags; ++t) scores[t] += it->second[t].weight;
    }
    const auto guess = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    if (guess != truth) return std::pair{guess, std::optional<std::size_t>(guess)};
    std::optional<std::size_t> rival;
    for (std::size_t t = 0; t < n_tags; ++t) {
      if (t != truth && scores[t] == scores[truth]) {
        rival = t;
        break;
      }
    }
    return std::pair{guess, rival};
  };

  Rng rng(seed);
  std::vector<std::size_t> order(sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t s : order) {
      const auto& sentence = sentences[s];
      std::string_view prev_tag = detail::kStart;
      for (std::size_t i = 0; i < sentence.size(); ++i) {
        const std::string& word = sentence[i].word;
        std::size_t guess;
        if (auto lex = tagger.lexicon_.find(word); lex != tagger.lexicon_.end()) {
          guess = lex->second;
        } else {
          const auto features = detail::tagger_features(
              word, prev_tag, i == 0 ? detail::kStart : std::string_view(sentence[i - 1].word),
              i + 1 == sentence.size() ? detail::kEnd : std::string_view(sentence[i + 1].word));
          const std::size_t truth = gold[s][i];
          const auto [predicted, rival] = score(features, truth);
          guess = predicted;
          if (rival) {
            for (const auto& f : features) {
              auto& row = params[f];
              if (row.empty()) row.resize(n_tags);
              row[truth].add(1.0, instances);
              row[*rival].add(-1.0, instances);
            }
          }
        }
        prev_tag = tagger.tagset_.label(guess);
        ++instances;
      }
    }
  }

  // Average over every instance seen; drop rows that average to zero.
  const double denom = static_cast<double>(std::max<std::int64_t>(instances, 1));
  for (auto& [feature, row] : params) {
    std::vector<double> averaged(n_tags, 0.0);
    bool nonzero = false;
    for (std::size_t t = 0; t < n_tags; ++t) {
      const auto& p = row[t];
      const double total = p.total + static_cast<double>(instances - p.stamp) * p.weight;
      averaged[t] = total / denom;
      nonzero = nonzero || averaged[t] != 0.0;
    }
    if (nonzero) tagger.weights_.emplace(feature, std::move(averaged));
  }
  tagger.trained_ = true;
  return tagger;
}

inline std::vector<TaggedToken> PerceptronTagger::tag(std::span<const std::string> tokens) const {
  if (!trained_) throw UsageError("tagger is not trained");
  std::vector<TaggedToken> out;
  out.reserve(tokens.size());
  std::string_view prev_tag = detail::kStart;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::size_t tag;
    if (auto lex = lexicon_.find(tokens[i]); lex != lexicon_.end()) {
      tag = lex->second;
    } else {
      tag = predict(detail::tagger_features(
          tokens[i], prev_tag, i == 0 ? detail::kStart : std::string_view(tokens[i - 1]),
          i + 1 == tokens.size() ? detail::kEnd : std::string_view(tokens[i + 1])));
    }
    out.push_back({tokens[i], tagset_.label(tag)});
    prev_tag = tagset_.label(tag);
  }
  return out;
}

namespace detail {
inline constexpr std::string_view kTaggerMagic = "POSLINK-TAGGER";
inline constexpr std::string_view kTaggerVersion = "v1";
}  // namespace detail

// Text container: magic/version line, then tagset, lexicon and sparse weight
// rows, each section sorted so identical taggers serialize identically.
inline void PerceptronTagger::save(const std::filesystem::path& path) const {
  if (!trained_) throw UsageError("cannot save an untrained tagger");
  auto out = io::open_output(path);
  out << detail::kTaggerMagic << ' ' << detail::kTaggerVersion << '\n';
  out << "tagset " << tagset_.size() << '\n';
  for (const auto& t : tagset_.labels()) out << t << '\n';

  std::vector<std::pair<std::string_view, std::size_t>> lexicon(lexicon_.begin(), lexicon_.end());
  std::sort(lexicon.begin(), lexicon.end());
  out << "lexicon " << lexicon.size() << '\n';
  for (const auto& [word, tag] : lexicon) out << word << '\t' << tagset_.label(tag) << '\n';

  std::vector<std::string_view> features;
  features.reserve(weights_.size());
  for (const auto& [f, _] : weights_) features.push_back(f);
  std::sort(features.begin(), features.end());
  out << "weights " << features.size() << '\n';
  for (auto f : features) {
    out << f;
    const auto& row = weights_.find(std::string(f))->second;
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (row[t] != 0.0) out << '\t' << t << ':' << io::format_exact(row[t]);
    }
    out << '\n';
  }
  out << "end\n";
  io::finish_output(out, path);
}

inline PerceptronTagger PerceptronTagger::load(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  const auto fail = [&](const std::string& what) -> void {
    throw DataError("tagger model " + path.string() + ": " + what);
  };
  std::string line;
  const auto next = [&]() -> std::string& {
    if (!io::getline_crlf(in, line)) fail("unexpected end of file");
    return line;
  };
  const auto section = [&](std::string_view name) {
    const auto parts = io::split(next(), ' ');
    if (parts.size() != 2 || parts[0] != name) fail("expected section '" + std::string(name) + "'");
    auto n = io::parse_int<std::size_t>(parts[1]);
    if (!n) fail("bad count for section '" + std::string(name) + "'");
    return *n;
  };

  const auto header = io::split(next(), ' ');
  if (header.size() != 2 || header[0] != detail::kTaggerMagic) fail("not a tagger model file");
  if (header[1] != detail::kTaggerVersion) fail("unsupported version '" + std::string(header[1]) + "'");

  PerceptronTagger tagger;
  std::vector<std::string> labels(section("tagset"));
  for (auto& l : labels) l = next();
  try {
    tagger.tagset_ = TagSet(std::move(labels));
  } catch (const Error& e) {
    fail(e.what());
  }
  const std::size_t n_tags = tagger.tagset_.size();

  const std::size_t n_lex = section("lexicon");
  for (std::size_t i = 0; i < n_lex; ++i) {
    const auto parts = io::split(next(), '\t');
    if (parts.size() != 2) fail("malformed lexicon entry");
    auto tag = tagger.tagset_.find(parts[1]);
    if (!tag) fail("lexicon tag '" + std::string(parts[1]) + "' not in tagset");
    tagger.lexicon_.emplace(std::string(parts[0]), *tag);
  }

  const std::size_t n_weights = section("weights");
  for (std::size_t i = 0; i < n_weights; ++i) {
    const auto parts = io::split(next(), '\t');
    std::vector<double> row(n_tags, 0.0);
    for (std::size_t k = 1; k < parts.size(); ++k) {
      const auto colon = parts[k].find(':');
      if (colon == std::string_view::npos) fail("malformed weight entry");
      auto t = io::parse_int<std::size_t>(parts[k].substr(0, colon));
      auto w = io::parse_double(parts[k].substr(colon + 1));
      if (!t || *t >= n_tags || !w || !std::isfinite(*w)) fail("malformed weight entry");
      row[*t] = *w;
    }
    tagger.weights_.emplace(std::string(parts[0]), std::move(row));
  }
  if (next() != "end") fail("missing end marker");
  tagger.trained_ = true;
  return tagger;
}

// Suffix and closed-class rules, used when no trained model is available.
inline std::string fallback_tag_word(std::string_view word) {
  static const std::unordered_map<std::string_view, std::string_view> closed = {
      {"the", "DT"},  {"a", "DT"},     {"an", "DT"},     {"and", "CC"},   {"or", "CC"},
      {"but", "CC"},  {"to", "TO"},    {"of", "IN"},     {"in", "IN"},    {"on", "IN"},
      {"at", "IN"},   {"by", "IN"},    {"he", "PRP"},    {"she", "PRP"},  {"it", "PRP"},
      {"they", "PRP"}, {"i", "PRP"},   {"we", "PRP"},    {"you", "PRP"},  {"can", "MD"},
      {"will", "MD"}, {"may", "MD"},   {"must", "MD"},   {"should", "MD"}, {"could", "MD"},
      {"would", "MD"}};
  const auto ends = [word](std::string_view s) { return word.ends_with(s) && word.size() > s.size(); };
  if (detail::all_digits(word)) return "CD";
  if (auto it = closed.find(word); it != closed.end()) return std::string(it->second);
  if (ends("ing")) return "VBG";
  if (ends("ed")) return "VBD";
  if (ends("ly")) return "RB";
  if (ends("able") || ends("ible") || ends("ous") || ends("ful")) return "JJ";
  if (ends("s") && !word.ends_with("ss")) return "NNS";
  return "NN";
}

inline std::vector<TaggedToken> fallback_tag(std::span<const std::string> tokens) {
  std::vector<TaggedToken> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back({t, fallback_tag_word(t)});
  return out;
}

// `word_TAG` tokens separated by whitespace, one sentence per line. The tag is
// whatever follows the last underscore.
inline std::vector<TaggedSentence> load_tagged_corpus(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  std::vector<TaggedSentence> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (io::getline_crlf(in, line)) {
    ++line_no;
    TaggedSentence sentence;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const std::size_t start = line.find_first_not_of(" \t", pos);
      if (start == std::string::npos) break;
      std::size_t stop = line.find_first_of(" \t", start);
      if (stop == std::string::npos) stop = line.size();
      const std::string_view tok(line.data() + start, stop - start);
      const std::size_t us = tok.rfind('_');
      if (us == std::string_view::npos || us == 0 || us + 1 == tok.size()) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": token '" +
                        std::string(tok) + "' is not word_TAG");
      }
      sentence.push_back({std::string(tok.substr(0, us)), std::string(tok.substr(us + 1))});
      pos = stop;
    }
    if (!sentence.empty()) sentences.push_back(std::move(sentence));
  }
  return sentences;
}

// Fraction of tokens whose predicted tag equals the gold tag.
inline double token_accuracy(const PerceptronTagger& tagger, std::span<const TaggedSentence> sentences) {
  std::size_t hits = 0, total = 0;
  std::vector<std::string> words;
  for (const auto& sentence : sentences) {
    words.clear();
    for (const auto& tok : sentence) words.push_back(tok.word);
    const auto predicted = tagger.tag(words);
    for (std::size_t i = 0; i < sentence.size(); ++i) hits += predicted[i].tag == sentence[i].tag;
    total += sentence.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace poslink
