// poslink: link prediction from part-of-speech tag counts.
//
//   poslink ingest  --nodes nodes.tsv --pairs train.csv --out run
//   poslink tag     --fallback --out run
//   poslink select  --pairs train.csv --select ttest:0.05 --out run
//   poslink train   --pairs train.csv --select list:run/tags.txt --model random_forest --out run
//   poslink predict --pairs test.csv --out run
//
// Exit status: 0 ok, 1 usage error, 2 data error, 3 internal error.

#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "poslink/cli.hpp"

namespace {

using poslink::cli::PipelineConfig;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Raw {
  std::string nodes, pairs, tagger, tagset, vectors, corpus, model_file;
  std::string mode = "min";
  std::string select = "full";
  std::string ttest = "welch";
};

void add_out(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--out", cfg.out, "output directory")->capture_default_str();
}

void add_seed(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--seed", cfg.seed, "master random seed")->capture_default_str();
}

void add_inputs(CLI::App* cmd, PipelineConfig& cfg, Raw& raw) {
  cmd->add_option("--pairs", raw.pairs, "labeled pairs CSV (source,target,label)")->required();
  cmd->add_option("--vectors", raw.vectors, "tag-count vectors (default <out>/vectors.csv)");
  cmd->add_option("--corpus", raw.corpus, "cleaned corpus cache (default <out>/corpus.tsv)");
  add_out(cmd, cfg);
}

void add_selection(CLI::App* cmd, Raw& raw) {
  cmd->add_option("--select", raw.select, "full | topk:K | ttest:ALPHA | list:FILE")->capture_default_str();
  cmd->add_option("--ttest", raw.ttest, "welch | pooled")->capture_default_str();
}

void add_features(CLI::App* cmd, PipelineConfig& cfg, Raw& raw) {
  cmd->add_option("--mode", raw.mode, "indicator | min | sum")->capture_default_str();
  cmd->add_flag("--common-words", cfg.common_words, "add the shared-word count as a feature");
  cmd->add_option("--valid-fraction", cfg.valid_fraction, "validation share of the labeled pairs")
      ->capture_default_str();
  cmd->add_flag("--timings", cfg.timings, "include train/predict seconds in report CSVs");
}

void add_model(CLI::App* cmd, PipelineConfig& cfg) {
  cmd->add_option("--model", cfg.model,
                  "logistic | knn | decision_tree | random_forest | extra_trees | gbt | mlp | linear_svm | "
                  "xgboost | lightgbm")
      ->capture_default_str();
  cmd->add_option("--param", cfg.params, "hyperparameter override KEY=VALUE (repeatable)");
}

void finalize(PipelineConfig& cfg, const Raw& raw) {
  const auto opt = [](const std::string& s) -> std::optional<std::filesystem::path> {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
  };
  cfg.nodes = opt(raw.nodes);
  cfg.pairs = opt(raw.pairs);
  cfg.tagger = opt(raw.tagger);
  cfg.tagset = opt(raw.tagset);
  cfg.vectors = opt(raw.vectors);
  cfg.corpus = opt(raw.corpus);
  cfg.model_file = opt(raw.model_file);
  cfg.mode = poslink::parse_feature_mode(raw.mode);
  cfg.select = poslink::cli::Selection::parse(raw.select);
  if (raw.ttest == "welch") {
    cfg.ttest = poslink::TTestKind::Welch;
  } else if (raw.ttest == "pooled") {
    cfg.ttest = poslink::TTestKind::Pooled;
  } else {
    throw poslink::UsageError("--ttest must be welch or pooled");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Link prediction from part-of-speech tag counts"};
  app.require_subcommand(1);
  PipelineConfig cfg;
  Raw raw;
  std::map<CLI::App*, std::function<void(const PipelineConfig&, std::ostream&)>> commands;

  auto* ingest = app.add_subcommand("ingest", "clean node texts into <out>/corpus.tsv");
  ingest->add_option("--nodes", raw.nodes, "node file: id<TAB>text per line")->required();
  ingest->add_option("--pairs", raw.pairs, "labeled pairs to validate against the nodes");
  add_out(ingest, cfg);
  commands[ingest] = poslink::cli::cmd_ingest;

  auto* tag = app.add_subcommand("tag", "tag the corpus cache into <out>/vectors.csv");
  tag->add_option("--tagger", raw.tagger, "trained tagger model");
  tag->add_flag("--fallback", cfg.fallback, "use the built-in suffix rules instead of a model");
  tag->add_option("--tagset", raw.tagset, "tag inventory file, one tag per line");
  tag->add_option("--corpus", raw.corpus, "cleaned corpus cache (default <out>/corpus.tsv)");
  add_out(tag, cfg);
  commands[tag] = poslink::cli::cmd_tag;

  auto* stats = app.add_subcommand("stats", "exploratory CSV and SVG charts under <out>/stats");
  add_inputs(stats, cfg, raw);
  stats->add_option("--bucket-width", cfg.bucket_width, "common-word histogram bucket width")->capture_default_str();
  commands[stats] = poslink::cli::cmd_stats;

  auto* select = app.add_subcommand("select", "choose tag columns into <out>/tags.txt");
  add_inputs(select, cfg, raw);
  add_selection(select, raw);
  commands[select] = poslink::cli::cmd_select;

  auto* train = app.add_subcommand("train", "train and validate a classifier into <out>/model.txt");
  add_inputs(train, cfg, raw);
  add_selection(train, raw);
  add_features(train, cfg, raw);
  add_model(train, cfg);
  add_seed(train, cfg);
  commands[train] = poslink::cli::cmd_train;

  auto* predict = app.add_subcommand("predict", "score unlabeled pairs into <out>/submission.csv");
  predict->add_option("--pairs", raw.pairs, "unlabeled pairs CSV (id,source,target)")->required();
  predict->add_option("--model-file", raw.model_file, "trained model (default <out>/model.txt)");
  predict->add_option("--vectors", raw.vectors, "tag-count vectors (default <out>/vectors.csv)");
  predict->add_option("--corpus", raw.corpus, "cleaned corpus cache (default <out>/corpus.tsv)");
  add_out(predict, cfg);
  commands[predict] = poslink::cli::cmd_predict;

  auto* ablate = app.add_subcommand("ablate", "validation F1 per tag selection into <out>/ablation.csv");
  add_inputs(ablate, cfg, raw);
  add_features(ablate, cfg, raw);
  add_model(ablate, cfg);
  add_seed(ablate, cfg);
  ablate->add_option("--ttest", raw.ttest, "welch | pooled")->capture_default_str();
  ablate->add_option("--sizes", cfg.sizes, "selections to compare")->delimiter(',')->capture_default_str();
  commands[ablate] = poslink::cli::cmd_ablate;

  auto* compare = app.add_subcommand("compare", "rank classifiers by validation F1");
  add_inputs(compare, cfg, raw);
  add_selection(compare, raw);
  add_features(compare, cfg, raw);
  add_seed(compare, cfg);
  compare->add_option("--models", cfg.models, "model kinds or presets")->delimiter(',');
  commands[compare] = poslink::cli::cmd_compare;

  auto* synth = app.add_subcommand("synth", "write the planted-link benchmark under <out>");
  add_out(synth, cfg);
  add_seed(synth, cfg);
  commands[synth] = poslink::cli::cmd_synth;

  auto* train_tagger = app.add_subcommand("train-tagger", "train the perceptron tagger into <out>/tagger.txt");
  train_tagger->add_option("--corpus", raw.corpus, "word_TAG corpus, one sentence per line")->required();
  train_tagger->add_option("--tagset", raw.tagset, "tag inventory file, one tag per line");
  train_tagger->add_option("--epochs", cfg.epochs, "training passes")->capture_default_str();
  add_out(train_tagger, cfg);
  add_seed(train_tagger, cfg);
  commands[train_tagger] = poslink::cli::cmd_train_tagger;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    finalize(cfg, raw);
    for (auto* sub : app.get_subcommands()) commands.at(sub)(cfg, std::cout);
    return kOk;
  } catch (const poslink::UsageError& e) {
    std::cerr << "poslink: " << e.what() << '\n';
    return kUsage;
  } catch (const poslink::DataError& e) {
    std::cerr << "poslink: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "poslink: internal error: " << e.what() << '\n';
    return kInternal;
  }
}
