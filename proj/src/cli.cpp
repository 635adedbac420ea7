#include "seqtag/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "seqtag/corpus.hpp"
#include "seqtag/errors.hpp"
#include "seqtag/evaluation.hpp"
#include "seqtag/kernels.hpp"
#include "seqtag/model.hpp"
#include "seqtag/training.hpp"

namespace seqtag::cli {

namespace {

struct Options {
  std::string train_file, dev_file, input, gold, model, out, embeddings_file, config_file;
  // Training flags keyed by their config-file spelling; only set flags appear.
  std::map<std::string, std::string> overrides;
  bool pos_features = false;
  bool bio_mask = false;
  int threads = 1;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("no such file: '" + path + "'");
  return in;
}

std::vector<Sentence> read_corpus(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_conll(in);
  } catch (const ParseError& e) {
    throw ParseError(e, path);
  }
}

EmbeddingProvider read_embeddings(const std::string& path) {
  auto in = open_input(path);
  std::size_t dim = 0;
  try {
    auto cache = read_precomputed_embeddings(in, &dim);
    return EmbeddingProvider::precomputed(dim, std::move(cache));
  } catch (const ParseError& e) {
    throw ParseError(e, path);
  }
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  auto in = open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// defaults <- config file <- flags; epochs and lr fall back to
// architecture-specific defaults when neither source sets them.
TrainConfig resolve_config(const Options& o) {
  std::map<std::string, std::string> kv;
  if (!o.config_file.empty()) kv = read_config_file(o.config_file);
  for (const auto& [k, v] : o.overrides) kv[k] = v;
  if (o.pos_features) kv["pos-features"] = "1";
  if (o.bio_mask) kv["bio-mask"] = "1";

  TrainConfig c;
  if (auto it = kv.find("arch"); it != kv.end()) c.set("arch", it->second);
  c.epochs = default_epochs(c.architecture);
  c.learning_rate = default_learning_rate(c.architecture);
  for (const auto& [k, v] : kv)
    if (k != "arch") c.set(k, v);
  c.validate();
  return c;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const TrainConfig config = resolve_config(o);
  if (o.threads < 1) throw ConfigError("--threads must be at least 1");
  const auto train_set = read_corpus(o.train_file);
  const auto dev_set = o.dev_file.empty() ? std::vector<Sentence>{} : read_corpus(o.dev_file);

  TrainOptions opts;
  opts.workers = o.threads;
  if (!o.embeddings_file.empty()) opts.precomputed = read_embeddings(o.embeddings_file);
  err << format_epoch_header() << '\n';
  opts.on_epoch = [&err](const EpochRecord& r) { err << format_epoch(r) << '\n'; };

  TrainResult result = train(train_set, dev_set, config, std::move(opts));
  save_model(result.params, std::filesystem::path(o.model));
  const auto& report_set = dev_set.empty() ? train_set : dev_set;
  out << format_report(evaluate_model(result.params, report_set, o.threads));
  return kOk;
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream&) {
  if (o.threads < 1) throw ConfigError("--threads must be at least 1");
  ModelParams params = load_model(std::filesystem::path(o.model));
  if (params.embeddings.mode() == EmbeddingProvider::Mode::Precomputed) {
    if (o.embeddings_file.empty())
      throw ConfigError("model was trained on precomputed embeddings; pass --embeddings-file");
    EmbeddingProvider provided = read_embeddings(o.embeddings_file);
    if (provided.dim() != params.embeddings.dim())
      throw ContractError("embeddings file has dim " + std::to_string(provided.dim()) +
                          ", model expects " + std::to_string(params.embeddings.dim()));
    params.embeddings.set_cache(provided.cache());
  }
  auto sentences = read_corpus(o.input);
  const auto tags = predict_batch_parallel(params, sentences, o.threads);
  for (std::size_t i = 0; i < sentences.size(); ++i) sentences[i].gold_tags = tags[i];

  if (o.out.empty()) {
    write_conll(out, sentences);
  } else {
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + o.out + "' for writing");
    write_conll(f, sentences);
  }
  return kOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream&) {
  const auto gold = read_corpus(o.gold);
  const auto pred = read_corpus(o.input);
  const std::size_t n = std::min(gold.size(), pred.size());
  std::vector<TagSequence> pred_tags;
  std::vector<Sentence> gold_fixed = gold;
  for (std::size_t i = 0; i < n; ++i) {
    if (gold[i].tokens != pred[i].tokens)
      throw AlignmentError("sentence " + std::to_string(i) + " differs between gold and prediction",
                           i);
    if (!gold[i].gold_tags || !pred[i].gold_tags)
      throw AlignmentError("sentence " + std::to_string(i) + " has no tag column", i);
    gold_fixed[i].gold_tags = repair_bio(*gold[i].gold_tags);
    pred_tags.push_back(repair_bio(*pred[i].gold_tags));
  }
  if (gold.size() != pred.size())
    throw AlignmentError("sentence " + std::to_string(n) + " exists in only one file (gold has " +
                             std::to_string(gold.size()) + ", prediction has " +
                             std::to_string(pred.size()) + ")",
                         n);
  const std::string report = format_report(score_sentences(gold_fixed, pred_tags));
  if (o.out.empty()) {
    out << report;
  } else {
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + o.out + "' for writing");
    f << report;
  }
  return kOk;
}

void add_training_flags(CLI::App& cmd, Options& o) {
  auto opt = [&](const std::string& flag, const std::string& key, const std::string& help) {
    cmd.add_option_function<std::string>(
        flag, [&o, key](const std::string& v) { o.overrides[key] = v; }, help);
  };
  opt("--arch", "arch", "linear | crf | bilstm-crf");
  opt("--epochs", "epochs", "training epochs (default 5 linear, 20 crf variants)");
  opt("--lr", "lr", "learning rate");
  opt("--dropout", "dropout", "dropout probability (default 0.3)");
  opt("--batch-size", "batch-size", "sentences per update (default 8)");
  opt("--seed", "seed", "random seed (default 0)");
  opt("--patience", "patience", "epochs without dev improvement before stopping (0 = never)");
  opt("--embed-dim", "embed-dim", "trainable embedding width");
  opt("--hidden-dim", "hidden-dim", "BiLSTM size per direction / linear hidden width");
  opt("--optimizer", "optimizer", "sgd | adam");
  opt("--max-grad-norm", "max-grad-norm", "global gradient clipping norm (0 = off)");
  cmd.add_flag("--pos-features", o.pos_features, "append one-hot POS tags to embeddings");
  cmd.add_flag("--bio-mask", o.bio_mask, "forbid illegal BIO transitions in the CRF");
  cmd.add_option("--config", o.config_file, "key=value config file (flags take precedence)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sequence labeling for named entity recognition", "seqtag"};
  app.require_subcommand(1);
  Options o;

  auto* train_cmd = app.add_subcommand("train", "train a model on a CoNLL file");
  train_cmd->add_option("--train-file", o.train_file, "training corpus (CoNLL)")->required();
  train_cmd->add_option("--dev-file", o.dev_file, "development corpus for model selection");
  train_cmd->add_option("--model", o.model, "output model path")->required();
  train_cmd->add_option("--embeddings-file", o.embeddings_file, "precomputed embeddings");
  train_cmd->add_option("--threads", o.threads, "worker threads (results do not depend on it)");
  add_training_flags(*train_cmd, o);

  auto* predict_cmd = app.add_subcommand("predict", "tag a CoNLL file with a trained model");
  predict_cmd->add_option("--input", o.input, "input corpus (CoNLL, tags ignored)")->required();
  predict_cmd->add_option("--model", o.model, "model path")->required();
  predict_cmd->add_option("--out", o.out, "output path (default stdout)");
  predict_cmd->add_option("--embeddings-file", o.embeddings_file, "precomputed embeddings");
  predict_cmd->add_option("--threads", o.threads, "worker threads");

  auto* eval_cmd = app.add_subcommand("evaluate", "score predicted tags against gold tags");
  eval_cmd->add_option("--gold", o.gold, "gold corpus (CoNLL)")->required();
  eval_cmd->add_option("--input", o.input, "predicted corpus (CoNLL)")->required();
  eval_cmd->add_option("--out", o.out, "report path (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train_cmd) return cmd_train(o, out, err);
    if (*predict_cmd) return cmd_predict(o, out, err);
    return cmd_evaluate(o, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace seqtag::cli
