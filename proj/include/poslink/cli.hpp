#pragma once

// Pipeline stages behind the `poslink` subcommands. Each stage reads its
// inputs from files, writes its outputs under the output directory and
// reports progress on the given stream.

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <optional>
#include <ostream>
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
#include "poslink/models/model.hpp"
#include "poslink/parallel.hpp"
#include "poslink/report.hpp"
#include "poslink/stats.hpp"
#include "poslink/synth.hpp"
#include "poslink/tagger.hpp"
#include "poslink/tagset.hpp"

namespace poslink::cli {

namespace fs = std::filesystem;

// How the tag columns are chosen: every tag, the k heaviest tags over linked
// pairs, the tags passing a t-test, or a list read from a file.
struct Selection {
  enum class Method { Full, TopK, TTest, List };
  Method method = Method::Full;
  std::size_t k = 7;
  double alpha = 0.05;
  fs::path list;
  std::string text = "full";

  static Selection parse(std::string_view text) {
    Selection s;
    s.text = std::string(text);
    const auto colon = text.find(':');
    const auto head = text.substr(0, colon);
    const auto arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    if (text == "full") return s;
    if (head == "topk" && !arg.empty()) {
      auto k = io::parse_int<std::size_t>(arg);
      if (!k || *k == 0) throw UsageError("topk needs a positive integer, got '" + std::string(arg) + "'");
      s.method = Method::TopK;
      s.k = *k;
      return s;
    }
    if (head == "ttest" && !arg.empty()) {
      auto alpha = io::parse_double(arg);
      if (!alpha || !(*alpha > 0.0 && *alpha < 1.0)) {
        throw UsageError("ttest needs an alpha in (0, 1), got '" + std::string(arg) + "'");
      }
      s.method = Method::TTest;
      s.alpha = *alpha;
      return s;
    }
    if (head == "list" && !arg.empty()) {
      s.method = Method::List;
      s.list = fs::path(std::string(arg));
      return s;
    }
    throw UsageError("bad selection '" + std::string(text) + "' (full|topk:K|ttest:ALPHA|list:FILE)");
  }

  // Label safe to use as a single token or CSV field.
  std::string name() const {
    switch (method) {
      case Method::Full: return "full";
      case Method::TopK: return "topk:" + std::to_string(k);
      case Method::TTest: return "ttest:" + io::format_real(alpha);
      case Method::List: return "list";
    }
    return "full";
  }
};

struct PipelineConfig {
  fs::path out = "poslink_out";
  std::optional<fs::path> nodes;
  std::optional<fs::path> pairs;
  std::optional<fs::path> tagger;
  std::optional<fs::path> tagset;
  std::optional<fs::path> vectors;  // default: <out>/vectors.csv
  std::optional<fs::path> corpus;   // default: <out>/corpus.tsv
  std::optional<fs::path> model_file;  // default: <out>/model.txt
  bool fallback = false;
  FeatureMode mode = FeatureMode::Min;
  Selection select;
  std::string model = "random_forest";
  std::vector<std::string> params;
  std::vector<std::string> models;  // compare
  std::vector<std::string> sizes = {"topk:7", "ttest:0.05", "full"};  // ablate
  double valid_fraction = 0.2;
  std::uint64_t seed = 42;
  bool common_words = false;
  TTestKind ttest = TTestKind::Welch;
  int epochs = 5;
  std::size_t bucket_width = 5;
  bool timings = false;
};

// Models run by `compare` when none are named. The SVM stays opt-in.
inline const std::vector<std::string>& default_compare_models() {
  static const std::vector<std::string> names = {"logistic", "knn",         "decision_tree", "random_forest",
                                                 "extra_trees", "xgboost", "lightgbm",      "mlp"};
  return names;
}

namespace detail {

inline const fs::path& require(const std::optional<fs::path>& p, std::string_view flag) {
  if (!p) throw UsageError("missing " + std::string(flag));
  return *p;
}

inline fs::path corpus_path(const PipelineConfig& cfg) { return cfg.corpus.value_or(cfg.out / "corpus.tsv"); }
inline fs::path vectors_path(const PipelineConfig& cfg) { return cfg.vectors.value_or(cfg.out / "vectors.csv"); }
inline fs::path model_path(const PipelineConfig& cfg) { return cfg.model_file.value_or(cfg.out / "model.txt"); }

inline std::vector<PairExample> labeled_pairs(const PipelineConfig& cfg) {
  return load_pairs(require(cfg.pairs, "--pairs"), true);
}

inline TokenMap load_tokens(const fs::path& corpus) {
  TokenMap tokens;
  for (const auto& node : load_nodes(corpus)) tokens.emplace(node.id, tokenize(node.clean_text));
  return tokens;
}

inline CommonWordMap common_word_map(std::span<const PairExample> pairs, const TokenMap& tokens) {
  CommonWordMap map;
  for (const auto& p : pairs) {
    const auto key = PairKey::of(p.u, p.v);
    if (!map.contains(key)) map[key] = common_word_count(tokens_for(tokens, p.u), tokens_for(tokens, p.v));
  }
  return map;
}

inline std::vector<std::string> read_tag_list(const fs::path& path, const TagSet& tagset) {
  auto in = io::open_input(path);
  std::vector<std::string> tags;
  std::set<std::string, std::less<>> seen;
  std::string line;
  while (io::getline_crlf(in, line)) {
    const auto tag = io::trim(line);
    if (tag.empty()) continue;
    if (!tagset.contains(tag)) throw DataError(path.string() + ": tag '" + std::string(tag) + "' is not in the tagset");
    if (!seen.emplace(tag).second) throw DataError(path.string() + ": tag '" + std::string(tag) + "' listed twice");
    tags.emplace_back(tag);
  }
  if (tags.empty()) throw DataError(path.string() + ": no tags listed");
  return tags;
}

struct ResolvedTags {
  std::vector<std::string> tags;
  std::optional<TagSelection> ttest;  // set when the method ran the t-test
};

inline ResolvedTags resolve_tags(const Selection& sel, std::span<const PairExample> pairs, const VectorTable& table,
                                 TTestKind kind) {
  ResolvedTags r;
  switch (sel.method) {
    case Selection::Method::Full: r.tags = table.tagset.labels(); break;
    case Selection::Method::TopK: {
      const auto totals = tag_appearance_totals(pairs, table.vectors, table.tagset.size(), true);
      r.tags = top_k_by_weight(totals, table.tagset, sel.k);
      if (r.tags.empty()) throw DataError("no tag occurs in any linked pair");
      break;
    }
    case Selection::Method::TTest:
      r.ttest = select_tags(pairs, table.vectors, table.tagset, sel.alpha, kind);
      r.tags = r.ttest->selected;
      if (r.tags.empty()) throw DataError("no tag passes the t-test at alpha " + io::format_real(sel.alpha));
      break;
    case Selection::Method::List: r.tags = read_tag_list(sel.list, table.tagset); break;
  }
  return r;
}

// Feature matrix for `tags` (plus the common-word column when asked).
inline FeatureMatrix featurize(const PipelineConfig& cfg, std::span<const PairExample> pairs,
                               const VectorTable& table, std::span<const std::string> tags,
                               bool common_words, FeatureMode mode) {
  std::optional<CommonWordMap> cw;
  if (common_words) cw = common_word_map(pairs, load_tokens(corpus_path(cfg)));
  return build_dataset(pairs, table.vectors, tags, table.tagset, mode, common_words, cw ? &*cw : nullptr);
}

inline std::vector<std::string> with_common_column(std::vector<std::string> tags, bool common_words) {
  if (common_words) tags.emplace_back(kCommonWordsColumn);
  return tags;
}

inline void write_lines(const std::vector<std::string>& lines, const fs::path& path) {
  auto out = io::open_output(path);
  for (const auto& l : lines) out << l << '\n';
  io::finish_output(out, path);
}

inline std::string join(std::span<const std::string> items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace detail

// Cleans the node texts and caches them as <out>/corpus.tsv.
inline void cmd_ingest(const PipelineConfig& cfg, std::ostream& log) {
  auto nodes = load_nodes(detail::require(cfg.nodes, "--nodes"));
  for (auto& n : nodes) n.raw_text = n.clean_text;
  const auto path = cfg.out / "corpus.tsv";
  auto out = io::open_output(path);
  write_nodes(out, nodes);
  io::finish_output(out, path);
  log << "nodes: " << nodes.size() << '\n';
  if (cfg.pairs) {
    const auto pairs = detail::labeled_pairs(cfg);
    std::unordered_set<NodeId> ids;
    for (const auto& n : nodes) ids.insert(n.id);
    for (const auto& p : pairs) {
      for (auto id : {p.u, p.v}) {
        if (!ids.contains(id)) throw DataError(cfg.pairs->string() + ": pair refers to unknown node " + std::to_string(id));
      }
    }
    const auto counts = label_distribution(pairs);
    log << "pairs: " << pairs.size() << " (label 0: " << counts.label0 << ", label 1: " << counts.label1 << ")\n";
  }
  log << "wrote " << path.string() << '\n';
}

// Tags every cached node and writes per-node tag counts to <out>/vectors.csv.
inline void cmd_tag(const PipelineConfig& cfg, std::ostream& log) {
  if (cfg.tagger && cfg.fallback) throw UsageError("--tagger and --fallback are mutually exclusive");
  if (!cfg.tagger && !cfg.fallback) throw UsageError("no tagger: pass --tagger MODEL or --fallback");
  std::optional<PerceptronTagger> tagger;
  if (cfg.tagger) tagger = PerceptronTagger::load(*cfg.tagger);
  TagSet tagset = cfg.tagset ? TagSet::load(*cfg.tagset) : TagSet::penn_treebank();
  if (tagger) {
    if (cfg.tagset && !(tagger->tagset() == tagset)) throw UsageError("--tagset differs from the tagger's tagset");
    tagset = tagger->tagset();
  }

  const auto nodes = load_nodes(detail::corpus_path(cfg));
  std::vector<std::pair<NodeId, TagCountVector>> vectors(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t i) {
    const auto tokens = tokenize(nodes[i].clean_text);
    const auto tagged = tagger ? tagger->tag(tokens) : fallback_tag(tokens);
    vectors[i] = {nodes[i].id, count_tags(tagged, tagset)};
  });

  std::vector<std::uint64_t> totals(tagset.size(), 0);
  for (const auto& [id, v] : vectors) {
    for (std::size_t t = 0; t < totals.size(); ++t) totals[t] += v.counts[t];
  }
  const auto distinct = std::count_if(totals.begin(), totals.end(), [](auto c) { return c > 0; });
  const auto path = cfg.out / "vectors.csv";
  write_vectors_csv(vectors, tagset, path);
  log << "tagged " << nodes.size() << " nodes with " << (tagger ? "the perceptron tagger" : "the fallback tagger")
      << "; " << distinct << " distinct tags of " << tagset.size() << '\n';
  log << "wrote " << path.string() << '\n';
}

// Label distribution, common-word histogram (when a corpus cache exists) and
// unweighted/weighted tag totals over linked pairs, as CSV and SVG.
inline void cmd_stats(const PipelineConfig& cfg, std::ostream& log) {
  const auto table = read_vectors_csv(detail::vectors_path(cfg));
  const auto pairs = detail::labeled_pairs(cfg);
  const auto dir = cfg.out / "stats";

  const auto counts = label_distribution(pairs);
  const std::vector<report::Bar> label_bars = {{"0", static_cast<double>(counts.label0)},
                                               {"1", static_cast<double>(counts.label1)}};
  report::write_bars_csv(label_bars, "label", "pairs", dir / "label_distribution.csv");
  report::write_bar_chart_svg(label_bars, "Label distribution", "label", "pairs", dir / "label_distribution.svg");

  const auto corpus = detail::corpus_path(cfg);
  if (fs::exists(corpus)) {
    const auto hist = common_word_histogram(pairs, detail::load_tokens(corpus), cfg.bucket_width);
    std::vector<report::Bar> bars;
    for (const auto& [lo, n] : hist) {
      bars.push_back({std::to_string(lo) + "-" + std::to_string(lo + cfg.bucket_width - 1), static_cast<double>(n)});
    }
    report::write_bars_csv(bars, "common_words", "linked_pairs", dir / "common_words.csv");
    report::write_bar_chart_svg(bars, "Common words in linked pairs", "common words", "linked pairs",
                                dir / "common_words.svg");
  } else {
    log << "no corpus cache at " << corpus.string() << "; skipping the common-word histogram\n";
  }

  for (bool weighted : {false, true}) {
    const auto totals = tag_appearance_totals(pairs, table.vectors, table.tagset.size(), weighted);
    std::vector<std::size_t> order(totals.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return totals[a] > totals[b]; });
    std::vector<report::Bar> bars;
    for (auto t : order) {
      if (totals[t] > 0) bars.push_back({table.tagset.label(t), static_cast<double>(totals[t])});
    }
    const std::string stem = weighted ? "tag_totals_weighted" : "tag_totals_unweighted";
    report::write_bars_csv(bars, "tag", "total", dir / (stem + ".csv"));
    report::write_bar_chart_svg(bars, weighted ? "Shared tag occurrences in linked pairs" : "Tags shared by linked pairs",
                                "tag", weighted ? "sum of min counts" : "pairs", dir / (stem + ".svg"));
  }
  log << "pairs: " << pairs.size() << " (label 0: " << counts.label0 << ", label 1: " << counts.label1 << ")\n";
  log << "wrote " << dir.string() << '\n';
}

// Writes the chosen tags to <out>/tags.txt and the per-tag t-test report to
// <out>/ttest_report.csv.
inline void cmd_select(const PipelineConfig& cfg, std::ostream& log) {
  const auto table = read_vectors_csv(detail::vectors_path(cfg));
  const auto pairs = detail::labeled_pairs(cfg);
  auto resolved = detail::resolve_tags(cfg.select, pairs, table, cfg.ttest);
  if (!resolved.ttest) resolved.ttest = select_tags(pairs, table.vectors, table.tagset, 0.05, cfg.ttest);
  detail::write_lines(resolved.tags, cfg.out / "tags.txt");
  report::write_ttest_csv(resolved.ttest->report, cfg.out / "ttest_report.csv");

  const auto idx = poslink::resolve_tags(resolved.tags, table.tagset);
  const auto set_test = set_level_test(pairs, table.vectors, idx, cfg.ttest);
  log << "selected " << resolved.tags.size() << " tags (" << cfg.select.name() << "): " << detail::join(resolved.tags, " ")
      << '\n';
  log << "set-level test on the selection: t=" << io::format_real(set_test.t_stat)
      << " dof=" << io::format_real(set_test.dof) << " p=" << io::format_real(set_test.p_value) << '\n';
  log << "wrote " << (cfg.out / "tags.txt").string() << '\n';
}

// Trains on the training side of a stratified split, writes the model to
// <out>/model.txt and its validation scores to <out>/validation_report.csv.
inline void cmd_train(const PipelineConfig& cfg, std::ostream& log) {
  const auto table = read_vectors_csv(detail::vectors_path(cfg));
  const auto pairs = detail::labeled_pairs(cfg);
  const auto tags = detail::resolve_tags(cfg.select, pairs, table, cfg.ttest).tags;
  const auto matrix = detail::featurize(cfg, pairs, table, tags, cfg.common_words, cfg.mode);
  const auto split = train_valid_split(matrix, cfg.valid_fraction, cfg.seed);
  const auto spec = models::ClassifierSpec::make(cfg.model, cfg.params, cfg.seed);

  auto [model, row] = evaluate(spec, split.train, split.valid);
  model.metadata["mode"] = std::string(to_string(cfg.mode));
  model.metadata["common_words"] = cfg.common_words ? "1" : "0";
  model.metadata["selection"] = cfg.select.name();
  models::save_model(model, cfg.out / "model.txt");

  EvalReport report{{row}};
  report.write_csv(cfg.out / "validation_report.csv", cfg.timings);
  log << "trained " << row.model << " on " << split.train.rows() << " pairs, validated on " << split.valid.rows()
      << " pairs with " << tags.size() << " tag features\n";
  report.write_table(log);
  log << "wrote " << (cfg.out / "model.txt").string() << '\n';
}

// Scores unlabeled pairs (`id,source,target`) into <out>/submission.csv.
inline void cmd_predict(const PipelineConfig& cfg, std::ostream& log) {
  const auto model = models::load_model(detail::model_path(cfg));
  const auto table = read_vectors_csv(detail::vectors_path(cfg));
  const auto pairs = load_pairs(detail::require(cfg.pairs, "--pairs"), false);

  const auto meta = [&](const std::string& key) {
    auto it = model.metadata.find(key);
    if (it == model.metadata.end()) throw DataError("model file lacks '" + key + "' metadata");
    return it->second;
  };
  const auto mode = parse_feature_mode(meta("mode"));
  const bool common_words = meta("common_words") == "1";
  std::vector<std::string> tags = model.feature_names;
  if (common_words) {
    if (tags.empty() || tags.back() != kCommonWordsColumn) throw DataError("model file has inconsistent columns");
    tags.pop_back();
  }
  const auto matrix = detail::featurize(cfg, pairs, table, tags, common_words, mode);
  const auto predictions = model.predict_all(matrix);
  std::vector<std::uint64_t> ids;
  ids.reserve(pairs.size());
  for (const auto& p : pairs) ids.push_back(*p.row_id);
  const auto path = cfg.out / "submission.csv";
  write_submission(ids, predictions, path);
  const auto positives = std::count(predictions.begin(), predictions.end(), 1);
  log << "predicted " << predictions.size() << " pairs (" << positives << " linked)\n";
  log << "wrote " << path.string() << '\n';
}

struct AblationRow {
  std::string selection;
  std::vector<std::string> tags;
  EvalRow eval;
};

// One validation score per tag selection. Selections are computed from the
// training side of the split only, and every row shares the same split.
inline std::vector<AblationRow> run_ablation(const PipelineConfig& cfg, std::span<const PairExample> pairs,
                                             const VectorTable& table) {
  std::vector<Selection> selections;
  for (const auto& s : cfg.sizes) selections.push_back(Selection::parse(s));
  if (selections.empty()) throw UsageError("no selections to compare");

  const auto full = detail::featurize(cfg, pairs, table, table.tagset.labels(), cfg.common_words, cfg.mode);
  const auto split = train_valid_split(full, cfg.valid_fraction, cfg.seed);
  std::vector<PairExample> train_pairs;
  for (auto i : split.train_rows) train_pairs.push_back(pairs[i]);
  const auto spec = models::ClassifierSpec::make(cfg.model, cfg.params, cfg.seed);

  std::vector<AblationRow> rows;
  for (const auto& sel : selections) {
    AblationRow row;
    row.selection = sel.name();
    row.eval.model = spec.name;
    try {
      row.tags = detail::resolve_tags(sel, train_pairs, table, cfg.ttest).tags;
      const auto cols = detail::with_common_column(row.tags, cfg.common_words);
      row.eval = evaluate(spec, split.train.select_columns(cols), split.valid.select_columns(cols)).row;
    } catch (const Error& e) {
      row.eval.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_ablation_csv(std::span<const AblationRow> rows, const fs::path& path) {
  auto out = io::open_output(path);
  out << "selection,n_tags,tags,accuracy,f1,error\n";
  for (const auto& r : rows) {
    out << r.selection << ',' << r.tags.size() << ',' << detail::join(r.tags, " ") << ','
        << io::format_real(r.eval.accuracy) << ',' << io::format_real(r.eval.f1) << ',';
    if (r.eval.error) {
      std::string e = *r.eval.error;
      std::replace(e.begin(), e.end(), ',', ';');
      out << e;
    }
    out << '\n';
  }
  io::finish_output(out, path);
}

inline void cmd_ablate(const PipelineConfig& cfg, std::ostream& log) {
  const auto table = read_vectors_csv(detail::vectors_path(cfg));
  const auto pairs = detail::labeled_pairs(cfg);
  const auto rows = run_ablation(cfg, pairs, table);
  const auto path = cfg.out / "ablation.csv";
  write_ablation_csv(rows, path);
  for (const auto& r : rows) {
    log << r.selection << " (" << r.tags.size() << " tags): ";
    if (r.eval.error) {
      log << "failed: " << *r.eval.error << '\n';
    } else {
      log << "accuracy " << io::format_real(r.eval.accuracy) << ", f1 " << io::format_real(r.eval.f1) << '\n';
    }
  }
  log << "wrote " << path.string() << '\n';
}

// Trains several classifiers on one split and ranks them by validation F1.
inline void cmd_compare(const PipelineConfig& cfg, std::ostream& log) {
  const auto table = read_vectors_csv(detail::vectors_path(cfg));
  const auto pairs = detail::labeled_pairs(cfg);
  const auto tags = detail::resolve_tags(cfg.select, pairs, table, cfg.ttest).tags;
  const auto matrix = detail::featurize(cfg, pairs, table, tags, cfg.common_words, cfg.mode);
  const auto split = train_valid_split(matrix, cfg.valid_fraction, cfg.seed);
  std::vector<models::ClassifierSpec> specs;
  for (const auto& name : cfg.models.empty() ? default_compare_models() : cfg.models) {
    specs.push_back(models::ClassifierSpec::make(name, {}, cfg.seed));
  }
  const auto report = compare_models(specs, split.train, split.valid);
  const auto path = cfg.out / "compare_report.csv";
  report.write_csv(path, cfg.timings);
  report.write_table(log);
  log << "wrote " << path.string() << '\n';
}

// Writes the planted-link benchmark (nodes.tsv, train.csv, test.csv,
// test_labels.csv) under the output directory.
inline void cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
  synth::Config sc;
  sc.seed = cfg.seed;
  const auto b = synth::make_benchmark(sc);
  synth::write_benchmark(b, cfg.out);
  const auto counts = label_distribution(b.train);
  log << "nodes: " << b.nodes.size() << ", training pairs: " << b.train.size() << " (label 1: " << counts.label1
      << "), test pairs: " << b.test.size() << '\n';
  log << "wrote " << cfg.out.string() << '\n';
}

// Trains the perceptron tagger on a `word_TAG` corpus into <out>/tagger.txt.
inline void cmd_train_tagger(const PipelineConfig& cfg, std::ostream& log) {
  const auto sentences = load_tagged_corpus(detail::require(cfg.corpus, "--corpus"));
  if (cfg.epochs < 1) throw UsageError("--epochs must be at least 1");
  const TagSet tagset = cfg.tagset ? TagSet::load(*cfg.tagset) : TagSet::penn_treebank();
  const auto tagger = PerceptronTagger::train(sentences, cfg.epochs, cfg.seed, tagset);
  const auto path = cfg.out / "tagger.txt";
  tagger.save(path);
  log << "trained on " << sentences.size() << " sentences, " << cfg.epochs << " epochs; training accuracy "
      << io::format_real(token_accuracy(tagger, sentences)) << '\n';
  log << "wrote " << path.string() << '\n';
}

}  // namespace poslink::cli
