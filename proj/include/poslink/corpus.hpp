#pragma once

// Node and pair ingestion, text cleaning and tokenization.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "poslink/error.hpp"
#include "poslink/io.hpp"
#include "poslink/unicode.hpp"

namespace poslink {

using NodeId = std::uint64_t;

struct Node {
  NodeId id = 0;
  std::string raw_text;
  std::string clean_text;
};

struct PairExample {
  NodeId u = 0;
  NodeId v = 0;
  std::optional<int> label;
  // Row identifier of unlabeled (submission) files.
  std::optional<std::uint64_t> row_id;
};

// Anything that is not a letter, digit or whitespace becomes a space, letters
// are lowercased, whitespace runs collapse to one space and the ends are
// trimmed.
inline std::string clean_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (std::size_t pos = 0; pos < raw.size();) {
    const char32_t cp = unicode::decode_next(raw, pos);
    const bool letter = unicode::is_letter(cp);
    if (!letter && !unicode::is_digit(cp)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    unicode::append_utf8(out, letter ? unicode::to_lower(cp) : cp);
  }
  return out;
}

inline std::vector<std::string> tokenize(std::string_view clean) {
  std::vector<std::string> tokens;
  if (clean.empty()) return tokens;
  for (auto part : io::split(clean, ' ')) {
    if (!part.empty()) tokens.emplace_back(part);
  }
  return tokens;
}

enum class CommonWordMode {
  Distinct,  // size of the intersection of the distinct-token sets
  Multiset,  // sum over shared tokens of min(occurrences in u, occurrences in v)
};

inline std::size_t common_word_count(std::span<const std::string> u_tokens,
                                     std::span<const std::string> v_tokens,
                                     CommonWordMode mode = CommonWordMode::Distinct) {
  std::unordered_map<std::string_view, std::size_t> u_counts;
  for (const auto& t : u_tokens) ++u_counts[t];
  std::unordered_map<std::string_view, std::size_t> v_counts;
  for (const auto& t : v_tokens) ++v_counts[t];
  std::size_t total = 0;
  for (const auto& [token, count] : u_counts) {
    auto it = v_counts.find(token);
    if (it == v_counts.end()) continue;
    total += mode == CommonWordMode::Distinct ? 1 : std::min(count, it->second);
  }
  return total;
}

inline std::vector<Node> parse_nodes(std::istream& in, std::string_view source = "nodes") {
  std::vector<Node> nodes;
  std::unordered_set<NodeId> seen;
  std::string line;
  std::size_t line_no = 0;
  while (io::getline_crlf(in, line)) {
    ++line_no;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) +
                      ": expected exactly two tab-separated fields");
    }
    const auto id = io::parse_int<NodeId>(std::string_view(line).substr(0, tab));
    if (!id) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": node id '" +
                      line.substr(0, tab) + "' is not a non-negative integer");
    }
    if (!seen.insert(*id).second) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": duplicate node id " +
                      std::to_string(*id));
    }
    Node node;
    node.id = *id;
    node.raw_text = line.substr(tab + 1);
    node.clean_text = clean_text(node.raw_text);
    nodes.push_back(std::move(node));
  }
  return nodes;
}

inline std::vector<Node> load_nodes(const std::filesystem::path& path) {
  auto in = io::open_input(path);
  return parse_nodes(in, path.string());
}

// Writes `id<TAB>raw_text` lines, the inverse of parse_nodes.
inline void write_nodes(std::ostream& out, std::span<const Node> nodes) {
  for (const auto& n : nodes) out << n.id << '\t' << n.raw_text << '\n';
}

inline std::vector<PairExample> parse_pairs(std::istream& in, bool labeled,
                                            std::string_view source = "pairs") {
  std::vector<PairExample> pairs;
  std::string line;
  std::size_t line_no = 0;
  const auto fail = [&](const std::string& what) {
    throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (io::getline_crlf(in, line)) {
    ++line_no;
    const auto fields = io::split(line, ',');
    std::optional<std::uint64_t> parsed[3];
    bool numeric = fields.size() == 3;
    for (std::size_t i = 0; numeric && i < 3; ++i) {
      parsed[i] = io::parse_int<std::uint64_t>(io::trim(fields[i]));
      numeric = parsed[i].has_value();
    }
    if (!numeric) {
      // A first line with no numeric field at all is a header.
      const bool header = line_no == 1 && std::none_of(fields.begin(), fields.end(), [](std::string_view f) {
        return io::parse_double(io::trim(f)).has_value();
      });
      if (header) continue;
      fail(fields.size() == 3 ? "non-integer field" : "expected 3 comma-separated fields");
    }
    PairExample pair;
    if (labeled) {
      pair.u = *parsed[0];
      pair.v = *parsed[1];
      if (*parsed[2] > 1) fail("label " + std::to_string(*parsed[2]) + " is not 0 or 1");
      pair.label = static_cast<int>(*parsed[2]);
    } else {
      pair.row_id = *parsed[0];
      pair.u = *parsed[1];
      pair.v = *parsed[2];
    }
    if (pair.u == pair.v) fail("self-pair (" + std::to_string(pair.u) + "," + std::to_string(pair.v) + ")");
    pairs.push_back(pair);
  }
  return pairs;
}

inline std::vector<PairExample> load_pairs(const std::filesystem::path& path, bool labeled) {
  auto in = io::open_input(path);
  return parse_pairs(in, labeled, path.string());
}

}  // namespace poslink
