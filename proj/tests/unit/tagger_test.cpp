#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "poslink/error.hpp"
#include "poslink/io.hpp"
#include "poslink/tagger.hpp"
#include "poslink/tagset.hpp"

#include "support/corpora.hpp"
#include "support/paths.hpp"

using namespace poslink;

namespace {

TaggedSentence sentence(std::initializer_list<std::pair<const char*, const char*>> toks) {
  TaggedSentence s;
  for (const auto& [w, t] : toks) s.push_back({w, t});
  return s;
}

std::vector<std::string> words_of(const TaggedSentence& s) {
  std::vector<std::string> out;
  for (const auto& t : s) out.push_back(t.word);
  return out;
}

std::vector<std::string> tags_of(const std::vector<TaggedToken>& s) {
  std::vector<std::string> out;
  for (const auto& t : s) out.push_back(t.tag);
  return out;
}

const std::vector<TaggedSentence>& mini_corpus() {
  static const auto corpus = load_tagged_corpus(test_data_dir() / "mini_tagged.txt");
  return corpus;
}

}  // namespace

TEST(TagSet, PennDefault) {
  const TagSet ts;
  EXPECT_EQ(ts.size(), 37u);
  for (const char* t : {"CC", "CD", "DT", "IN", "JJ", "JJR", "JJS", "MD", "NN", "NNS", "PRP", "PRP$", "RB", "TO",
                        "VB", "VBG", "VBN", "VBD"}) {
    EXPECT_TRUE(ts.contains(t)) << t;
  }
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(ts.index_of(ts.label(i)), i);
  EXPECT_THROW(ts.index_of("NOPE"), DataError);
  EXPECT_THROW(TagSet(std::vector<std::string>{"A", "A"}), UsageError);
  EXPECT_THROW(TagSet(std::vector<std::string>{}), UsageError);
}

TEST(TagSet, LoadFromFile) {
  const auto dir = scratch_dir("tagset");
  {
    std::ofstream out(dir / "tags.txt");
    out << "X\n\nY\r\n Z \n";
  }
  const auto ts = TagSet::load(dir / "tags.txt");
  EXPECT_EQ(ts.labels(), (std::vector<std::string>{"X", "Y", "Z"}));
}

TEST(Fallback, RuleTable) {
  EXPECT_EQ(fallback_tag_word("running"), "VBG");
  EXPECT_EQ(fallback_tag_word("42"), "CD");
  EXPECT_EQ(fallback_tag_word("zzzz"), "NN");
  EXPECT_EQ(fallback_tag_word("walked"), "VBD");
  EXPECT_EQ(fallback_tag_word("quickly"), "RB");
  EXPECT_EQ(fallback_tag_word("cats"), "NNS");
  EXPECT_EQ(fallback_tag_word("class"), "NN");
  EXPECT_EQ(fallback_tag_word("famous"), "JJ");
  EXPECT_EQ(fallback_tag_word("readable"), "JJ");
  EXPECT_EQ(fallback_tag_word("visible"), "JJ");
  EXPECT_EQ(fallback_tag_word("hopeful"), "JJ");
  EXPECT_EQ(fallback_tag_word("the"), "DT");
  EXPECT_EQ(fallback_tag_word("but"), "CC");
  EXPECT_EQ(fallback_tag_word("to"), "TO");
  EXPECT_EQ(fallback_tag_word("by"), "IN");
  EXPECT_EQ(fallback_tag_word("you"), "PRP");
  EXPECT_EQ(fallback_tag_word("would"), "MD");
  // Closed-class words win over suffix rules; a bare suffix is not a match.
  EXPECT_EQ(fallback_tag_word("it"), "PRP");
  EXPECT_EQ(fallback_tag_word("s"), "NN");
  EXPECT_EQ(fallback_tag_word("ing"), "NN");
}

TEST(Fallback, DigitsOnlyCorpusYieldsCd) {
  const std::vector<std::string> toks = {"1", "22", "333"};
  for (const auto& t : fallback_tag(toks)) EXPECT_EQ(t.tag, "CD");
}

TEST(Perceptron, TrainErrors) {
  EXPECT_THROW(PerceptronTagger::train({}, 5, 1), UsageError);
  const std::vector<TaggedSentence> corpus = {sentence({{"dog", "NN"}})};
  EXPECT_THROW(PerceptronTagger::train(corpus, 0, 1), UsageError);
  const std::vector<TaggedSentence> bad = {sentence({{"dog", "NOUN"}})};
  try {
    PerceptronTagger::train(bad, 1, 1);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("NOUN"), std::string::npos);
  }
}

TEST(Perceptron, UntrainedTaggerRefuses) {
  const PerceptronTagger t;
  const std::vector<std::string> words = {"dog"};
  EXPECT_THROW(t.tag(words), UsageError);
}

TEST(Perceptron, UnambiguousWordGoesToLexicon) {
  std::vector<TaggedSentence> corpus;
  for (int i = 0; i < 25; ++i) corpus.push_back(sentence({{"the", "DT"}, {"dog", "NN"}, {"barks", "VBZ"}}));
  const auto tagger = PerceptronTagger::train(corpus, 3, 9);
  EXPECT_GE(tagger.lexicon_size(), 3u);
  const std::vector<std::string> q = {"dog"};
  const auto out = tagger.tag(q);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].tag, "NN");
  EXPECT_TRUE(tagger.tag(std::vector<std::string>{}).empty());
}

TEST(Perceptron, SingleSentenceMemorizedAfterOneEpoch) {
  // Worked through the update rule by hand: after one pass the averaged
  // weights put DT, NN, VBZ on top at each position (8.33, 4, 2.33 against
  // the runners-up 0.33, 0.67, 0.33).
  const std::vector<TaggedSentence> one = {sentence({{"the", "DT"}, {"dog", "NN"}, {"barks", "VBZ"}})};
  const auto tagger = PerceptronTagger::train(one, 1, 3);
  EXPECT_EQ(tags_of(tagger.tag(words_of(one[0]))), (std::vector<std::string>{"DT", "NN", "VBZ"}));
}

TEST(Perceptron, SmallCorpusFullyMemorized) {
  const auto small = consistently_tagged(mini_corpus(), 50);
  ASSERT_EQ(small.size(), 50u);
  for (std::uint64_t seed : {1, 42, 2024}) {
    const auto tagger = PerceptronTagger::train(small, 5, seed);
    EXPECT_EQ(token_accuracy(tagger, small), 1.0) << "seed " << seed;
  }
}

TEST(Perceptron, OutputShapeAndTagsetMembership) {
  const auto& corpus = mini_corpus();
  const std::vector<TaggedSentence> train(corpus.begin(), corpus.begin() + 100);
  const auto tagger = PerceptronTagger::train(train, 2, 5);
  const std::vector<std::string> odd = {"unseen", "words", "42", "qwerty", "the", "x"};
  const auto out = tagger.tag(odd);
  ASSERT_EQ(out.size(), odd.size());
  for (std::size_t i = 0; i < odd.size(); ++i) {
    EXPECT_EQ(out[i].word, odd[i]);
    EXPECT_TRUE(tagger.tagset().contains(out[i].tag));
  }
}

TEST(Perceptron, DeterministicForFixedSeed) {
  const auto& corpus = mini_corpus();
  const std::vector<TaggedSentence> train(corpus.begin(), corpus.begin() + 120);
  const auto dir = scratch_dir("tagger_det");
  PerceptronTagger::train(train, 3, 77).save(dir / "a.txt");
  PerceptronTagger::train(train, 3, 77).save(dir / "b.txt");
  EXPECT_EQ(io::read_file(dir / "a.txt"), io::read_file(dir / "b.txt"));
}

TEST(Perceptron, SaveLoadRoundTrip) {
  const auto& corpus = mini_corpus();
  const auto tagger = PerceptronTagger::train(corpus, 3, 42);
  const auto dir = scratch_dir("tagger_io");
  tagger.save(dir / "t.txt");
  const auto loaded = PerceptronTagger::load(dir / "t.txt");
  for (const auto& s : corpus) EXPECT_EQ(tags_of(loaded.tag(words_of(s))), tags_of(tagger.tag(words_of(s))));
  loaded.save(dir / "t2.txt");
  EXPECT_EQ(io::read_file(dir / "t.txt"), io::read_file(dir / "t2.txt"));
}

TEST(Perceptron, LoadRejectsCorruptFiles) {
  const auto& corpus = mini_corpus();
  const auto dir = scratch_dir("tagger_bad");
  PerceptronTagger::train(std::vector<TaggedSentence>(corpus.begin(), corpus.begin() + 30), 1, 1).save(dir / "t.txt");
  const auto text = io::read_file(dir / "t.txt");

  const auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / name, std::ios::binary) << body;
    return dir / name;
  };
  EXPECT_THROW(PerceptronTagger::load(write("trunc.txt", text.substr(0, text.size() / 2))), DataError);
  EXPECT_THROW(PerceptronTagger::load(write("magic.txt", "NOT-A-TAGGER v1\n")), DataError);
  std::string v2 = text;
  v2.replace(v2.find("v1"), 2, "v9");
  EXPECT_THROW(PerceptronTagger::load(write("version.txt", v2)), DataError);
  EXPECT_THROW(PerceptronTagger::load(dir / "missing.txt"), DataError);
}

TEST(Perceptron, HeldOutAccuracyOnBundledCorpus) {
  const auto& corpus = mini_corpus();
  ASSERT_GE(corpus.size(), 300u);
  const std::size_t cut = corpus.size() * 4 / 5;
  const std::vector<TaggedSentence> train(corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(cut));
  const std::vector<TaggedSentence> test(corpus.begin() + static_cast<std::ptrdiff_t>(cut), corpus.end());
  const auto tagger = PerceptronTagger::train(train, 5, 42);
  EXPECT_GE(token_accuracy(tagger, test), 0.90);
}

TEST(TaggedCorpus, ParsesWordTagTokens) {
  const auto dir = scratch_dir("tagged");
  std::ofstream(dir / "c.txt") << "New_York_NNP is_VBZ big_JJ\n\n a_DT\r\n";
  const auto c = load_tagged_corpus(dir / "c.txt");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0][0].word, "New_York");
  EXPECT_EQ(c[0][0].tag, "NNP");
  EXPECT_EQ(c[1][0].tag, "DT");
  std::ofstream(dir / "bad.txt") << "word_ ok_NN\n";
  EXPECT_THROW(load_tagged_corpus(dir / "bad.txt"), DataError);
}
