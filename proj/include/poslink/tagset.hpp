#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "poslink/error.hpp"
#include "poslink/io.hpp"

namespace poslink {

// Ordered tag inventory. Position in the list is the tag's index everywhere
// (count vectors, perceptron weight rows, tie-breaking).
class TagSet {
 public:
  TagSet() : TagSet(penn_treebank()) {}

  explicit TagSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw UsageError("tagset must contain at least one tag");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i].empty()) throw UsageError("tagset contains an empty tag");
      if (!index_.emplace(labels_[i], i).second) {
        throw UsageError("duplicate tag '" + labels_[i] + "' in tagset");
      }
    }
  }

  // The 36 Penn Treebank word tags plus UNK as catch-all (37 tags).
  static TagSet penn_treebank() {
    return TagSet({"CC",  "CD",  "DT",  "EX",  "FW",  "IN",  "JJ",  "JJR", "JJS", "LS",
                   "MD",  "NN",  "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB",
                   "RBR", "RBS", "RP",  "SYM", "TO",  "UH",  "VB",  "VBD", "VBG", "VBN",
                   "VBP", "VBZ", "WDT", "WP",  "WP$", "WRB", "UNK"});
  }

  // One tag per line; blank lines are ignored.
  static TagSet load(const std::filesystem::path& path) {
    auto in = io::open_input(path);
    std::vector<std::string> labels;
    std::string line;
    while (io::getline_crlf(in, line)) {
      auto tag = io::trim(line);
      if (!tag.empty()) labels.emplace_back(tag);
    }
    return TagSet(std::move(labels));
  }

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }

  std::optional<std::size_t> find(std::string_view tag) const {
    auto it = index_.find(std::string(tag));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view tag) const { return find(tag).has_value(); }

  std::size_t index_of(std::string_view tag) const {
    auto i = find(tag);
    if (!i) throw DataError("tag '" + std::string(tag) + "' is not in the tagset");
    return *i;
  }

  friend bool operator==(const TagSet& a, const TagSet& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace poslink
