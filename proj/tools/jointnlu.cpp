// jointnlu: prepare corpora, train, evaluate, predict, inspect and benchmark.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jointnlu/corpus.hpp"
#include "jointnlu/embeddings.hpp"
#include "jointnlu/error.hpp"
#include "jointnlu/eval.hpp"
#include "jointnlu/model.hpp"
#include "jointnlu/train.hpp"

namespace fs = std::filesystem;
using namespace jointnlu;
using nlohmann::json;

namespace {

struct VectorArgs {
  std::string embeddings;
  std::string contextual;
};

struct ModelArgs {
  std::string variant = "recurrent";
  int hidden = 100;
  int char_emb_dim = 25;
  int char_filters = 30;
  int char_width = 3;
  int max_char_len = kDefaultMaxCharLen;
  double dropout = 0.5;
  double slot_weight = 1.0;
  double intent_weight = 1.0;
};

struct TrainArgs {
  std::string train;
  std::string val;
  std::string format = "native";
  std::string out;
  std::string history;
  std::string task = "joint";
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  int max_epochs = 50;
  int patience = 2;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
};

void add_vector_options(CLI::App* cmd, VectorArgs& v) {
  cmd->add_option("--embeddings", v.embeddings, "Static word vectors (GloVe/fastText text)");
  cmd->add_option("--contextual", v.contextual,
                  "Precomputed contextual vectors; replaces --embeddings");
}

void add_model_options(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--variant", m.variant, "recurrent (model1) or time_distributed (model2)")
      ->capture_default_str();
  cmd->add_option("--hidden", m.hidden, "Hidden units")->capture_default_str();
  cmd->add_option("--char-emb-dim", m.char_emb_dim)->capture_default_str();
  cmd->add_option("--char-filters", m.char_filters)->capture_default_str();
  cmd->add_option("--char-width", m.char_width)->capture_default_str();
  cmd->add_option("--max-char-len", m.max_char_len)->capture_default_str();
  cmd->add_option("--dropout", m.dropout)->capture_default_str();
  cmd->add_option("--slot-weight", m.slot_weight)->capture_default_str();
  cmd->add_option("--intent-weight", m.intent_weight)->capture_default_str();
}

/// Word vectors for a run: a static table or a contextual store, owned here.
struct LoadedVectors {
  std::unique_ptr<EmbeddingTable> table;
  std::unique_ptr<ContextualStore> store;
  std::unique_ptr<WordVectorSource> source;
};

LoadedVectors load_vectors(const VectorArgs& args) {
  LoadedVectors v;
  if (!args.contextual.empty()) {
    v.store = std::make_unique<ContextualStore>(load_contextual(fs::path(args.contextual)));
    v.source = std::make_unique<ContextualVectors>(*v.store);
  } else if (!args.embeddings.empty()) {
    v.table = std::make_unique<EmbeddingTable>(load_embedding_text(fs::path(args.embeddings)));
    v.source = std::make_unique<StaticVectors>(*v.table);
  } else {
    throw Error("one of --embeddings or --contextual is required");
  }
  return v;
}

ModelConfig model_config(const ModelArgs& m, int word_dim, std::uint64_t seed) {
  ModelConfig c;
  c.variant = parse_variant(m.variant);
  c.word_dim = word_dim;
  c.hidden = m.hidden;
  c.char_emb_dim = m.char_emb_dim;
  c.char_filters = m.char_filters;
  c.char_width = m.char_width;
  c.max_char_len = m.max_char_len;
  c.dropout_rate = m.dropout;
  c.slot_loss_weight = m.slot_weight;
  c.intent_loss_weight = m.intent_weight;
  c.init_seed = seed;
  c.validate();
  return c;
}

void check_word_dim(const JointModel<float>& model, const WordVectorSource& vectors) {
  if (vectors.dim() != model.config().word_dim) {
    throw Error("word vector dimension " + std::to_string(vectors.dim()) +
                " does not match the model's " + std::to_string(model.config().word_dim));
  }
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

int cmd_prepare(const std::string& input, const std::string& format, const std::string& output) {
  const Corpus corpus = read_corpus(input, parse_corpus_format(format));
  write_native(corpus, fs::path(output));
  const CorpusStats s = corpus_stats(corpus);
  std::cout << "wrote " << s.utterances << " utterances (" << s.tokens << " tokens, "
            << s.entity_spans << " entity spans, " << s.intents << " intents) to " << output
            << '\n';
  return 0;
}

int cmd_train(const TrainArgs& t, const ModelArgs& m, const VectorArgs& v) {
  const Corpus full = read_corpus(t.train, parse_corpus_format(t.format));
  const LoadedVectors vectors = load_vectors(v);

  Corpus train = full;
  Corpus val;
  if (!t.val.empty()) {
    val = read_corpus(t.val, parse_corpus_format(t.format));
  } else if (t.val_fraction > 0.0) {
    std::tie(train, val) = split_validation(full, t.val_fraction, t.seed);
  } else {
    val = full;
  }

  const Task task = parse_task(t.task);
  const ModelConfig config = model_config(m, vectors.source->dim(), t.seed);
  JointModel<float> model(config, build_vocabularies(full));

  TrainConfig tc;
  tc.batch_size = t.batch_size;
  tc.max_epochs = t.max_epochs;
  tc.patience = t.patience;
  tc.shuffle_seed = t.seed;
  tc.adam.learning_rate = t.learning_rate;
  tc.clip_norm = t.clip_norm;

  if (vectors.table) {
    const OovReport oov = oov_report(*vectors.table, full);
    std::cout << "embeddings: " << vectors.table->size() << " vectors, dim "
              << vectors.table->dim() << ", oov rate " << fixed(oov.oov_rate) << '\n';
  } else {
    std::cout << "contextual vectors: " << vectors.store->size() << " entries, dim "
              << vectors.store->dim() << '\n';
  }
  std::cout << "train " << train.size() << ", validation " << val.size() << ", parameters "
            << model.count_parameters(task) << '\n';

  const auto print = [](const EpochRecord& r) {
    std::cout << "epoch " << r.epoch << "  train_loss " << fixed(r.train_loss) << "  val_loss "
              << fixed(r.val_loss) << "  " << fixed(r.seconds, 2) << "s" << std::endl;
  };
  const TrainHistory history =
      task == Task::joint ? fit(model, train, val, *vectors.source, tc, print)
                          : fit_single_task(model, train, val, *vectors.source, tc, task, print);

  save_checkpoint(model, fs::path(t.out));
  const fs::path history_path = t.history.empty() ? fs::path(t.out + ".history.jsonl")
                                                  : fs::path(t.history);
  {
    std::ofstream out(history_path);
    if (!out) throw Error("cannot write '" + history_path.string() + "'");
    write_history_jsonl(history, out);
    if (!out) throw Error("failed writing '" + history_path.string() + "'");
  }
  std::cout << (history.stopped_early ? "stopped early" : "reached max epochs") << " after "
            << history.epochs.size() << " epochs; best epoch " << history.best_epoch
            << " (val_loss " << fixed(history.epochs[history.best_epoch].val_loss) << ")\n"
            << "checkpoint: " << t.out << "\nhistory: " << history_path.string() << '\n';
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& test, const std::string& format,
             const VectorArgs& v, const std::string& report_path) {
  const JointModel<float> model = load_checkpoint(fs::path(model_path));
  const Corpus corpus = read_corpus(test, parse_corpus_format(format));
  const LoadedVectors vectors = load_vectors(v);
  check_word_dim(model, *vectors.source);
  const MetricsReport report = evaluate(model, corpus, *vectors.source);
  write_json_file(report_path, to_json(report));
  std::cout << "utterances " << report.utterances << "  intent_accuracy "
            << fixed(report.intent_accuracy) << "  slot_f1 " << fixed(report.slot.f1)
            << "  (precision " << fixed(report.slot.precision) << ", recall "
            << fixed(report.slot.recall) << ", token_f1 " << fixed(report.slot.token_f1)
            << ")\nreport: " << report_path << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const VectorArgs& v) {
  const JointModel<float> model = load_checkpoint(fs::path(model_path));
  const LoadedVectors vectors = load_vectors(v);
  check_word_dim(model, *vectors.source);
  std::string line;
  std::size_t id = 0;
  while (std::getline(std::cin, line)) {
    Utterance u;
    std::istringstream words(line);
    for (std::string w; words >> w;) u.tokens.push_back(w);
    if (u.tokens.empty()) continue;
    u.id = id++;
    u.tags.assign(u.tokens.size(), "O");
    std::cout << to_json(predict(model, u, *vectors.source)).dump() << '\n';
  }
  return 0;
}

int cmd_inspect(const std::string& model_path) {
  const JointModel<float> model = load_checkpoint(fs::path(model_path));
  const Vocabularies& vocab = model.vocabularies();
  std::cout << "config " << to_json(model.config()).dump() << '\n'
            << "vocabulary tokens " << vocab.tokens.size() << ", chars " << vocab.chars.size()
            << ", slots " << vocab.slots.size() << ", intents " << vocab.intents.size() << '\n'
            << "parameters " << model.count_parameters(Task::joint) << " (intent only "
            << model.count_parameters(Task::intent_only) << ", ner only "
            << model.count_parameters(Task::ner_only) << ")\n";
  for (const auto& p : model.parameters()) {
    std::cout << "  " << p.name << " " << p.value.shape().str() << '\n';
  }
  return 0;
}

int cmd_bench(const TrainArgs& t, const ModelArgs& m, const VectorArgs& v, int epochs) {
  if (epochs < 1) throw Error("--epochs must be at least 1");
  const Corpus corpus = read_corpus(t.train, parse_corpus_format(t.format));
  const LoadedVectors vectors = load_vectors(v);
  const ModelConfig config = model_config(m, vectors.source->dim(), t.seed);
  JointModel<float> model(config, build_vocabularies(corpus));
  AdamConfig adam;
  adam.learning_rate = t.learning_rate;
  AdamState<float> optimizer(model.parameters(), adam);

  std::cout << "variant " << to_string(config.variant) << ", parameters "
            << model.count_parameters() << ", utterances " << corpus.size() << '\n'
            << "epoch  seconds  train_loss\n";
  double total = 0.0;
  for (int e = 0; e < epochs; ++e) {
    const auto batches = make_batches<float>(corpus, model.vocabularies(), *vectors.source,
                                             t.batch_size, t.seed, static_cast<std::uint64_t>(e),
                                             config.max_char_len);
    const auto start = std::chrono::steady_clock::now();
    const double loss = train_epoch<float>(model, batches, optimizer, config.loss_weights(),
                                           t.clip_norm, t.seed + static_cast<std::uint64_t>(e));
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    total += seconds;
    std::cout << std::setw(5) << e << "  " << std::setw(7) << fixed(seconds, 3) << "  "
              << fixed(loss) << '\n';
  }
  std::cout << "mean " << fixed(total / epochs, 3) << " s/epoch\n";
  return 0;
}

/// Turns a JSON config object into flags placed before the user's own, so
/// explicit flags win under the take-last policy.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> out;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (!config_path) return out;

  std::ifstream in(*config_path);
  if (!in) throw Error("cannot open config file '" + *config_path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config file '" + *config_path + "': " + e.what());
  }
  if (!j.is_object()) throw Error("config file must hold a JSON object");

  std::vector<std::string> flags;
  for (const auto& [key, value] : j.items()) {
    std::string name = "--" + key;
    for (char& c : name) {
      if (c == '_') c = '-';
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) flags.push_back(name);
    } else if (value.is_string()) {
      flags.push_back(name);
      flags.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      flags.push_back(name);
      flags.push_back(value.dump());
    } else {
      throw Error("config key '" + key + "' must be a string, number or boolean");
    }
  }
  // Keep the subcommand name first.
  const auto at = out.empty() ? out.end() : out.begin() + 1;
  out.insert(at, flags.begin(), flags.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint intent classification and slot tagging", "jointnlu"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string input, output, format = "native";
  auto* prepare = app.add_subcommand("prepare", "Convert a corpus to native format");
  prepare->add_option("--input", input, "Corpus to read")->required();
  prepare->add_option("--format", format, "native or ctf")->capture_default_str();
  prepare->add_option("--output", output, "Native-format file to write")->required();

  TrainArgs t;
  ModelArgs m;
  VectorArgs v;
  auto* train = app.add_subcommand("train", "Train a model and write a checkpoint");
  train->add_option("--train", t.train, "Training corpus")->required();
  train->add_option("--val", t.val, "Validation corpus (default: split from --train)");
  train->add_option("--val-fraction", t.val_fraction,
                    "Held-out share of --train; 0 validates on the training set")
      ->capture_default_str();
  train->add_option("--format", t.format, "native or ctf")->capture_default_str();
  train->add_option("--out", t.out, "Checkpoint path")->required();
  train->add_option("--history", t.history, "History JSONL (default: <out>.history.jsonl)");
  train->add_option("--seed", t.seed, "Initialization, shuffling and dropout seed")
      ->capture_default_str();
  train->add_option("--task", t.task, "joint, intent or ner")->capture_default_str();
  train->add_option("--epochs,--max-epochs", t.max_epochs)->capture_default_str();
  train->add_option("--patience", t.patience)->capture_default_str();
  train->add_option("--batch-size", t.batch_size)->capture_default_str();
  train->add_option("--lr", t.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--clip-norm", t.clip_norm)->capture_default_str();
  add_vector_options(train, v);
  add_model_options(train, m);

  std::string model_path, test, report;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a labelled corpus");
  eval->add_option("--model", model_path, "Checkpoint")->required();
  eval->add_option("--test", test, "Test corpus")->required();
  eval->add_option("--format", format, "native or ctf")->capture_default_str();
  eval->add_option("--report", report, "Metrics JSON to write")->required();
  add_vector_options(eval, v);

  auto* pred = app.add_subcommand("predict", "Tag whitespace-tokenized lines from stdin");
  pred->add_option("--model", model_path, "Checkpoint")->required();
  add_vector_options(pred, v);

  auto* inspect = app.add_subcommand("inspect", "Show a checkpoint's config and size");
  inspect->add_option("--model", model_path, "Checkpoint")->required();

  int bench_epochs = 1;
  auto* bench = app.add_subcommand("bench", "Time training epochs");
  bench->add_option("--train", t.train, "Training corpus")->required();
  bench->add_option("--format", t.format, "native or ctf")->capture_default_str();
  bench->add_option("--epochs", bench_epochs, "Epochs to time")->required();
  bench->add_option("--batch-size", t.batch_size)->capture_default_str();
  bench->add_option("--seed", t.seed)->capture_default_str();
  bench->add_option("--lr", t.learning_rate)->capture_default_str();
  add_vector_options(bench, v);
  add_model_options(bench, m);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*prepare) return cmd_prepare(input, format, output);
    if (*train) return cmd_train(t, m, v);
    if (*eval) return cmd_eval(model_path, test, format, v, report);
    if (*pred) return cmd_predict(model_path, v);
    if (*inspect) return cmd_inspect(model_path);
    if (*bench) return cmd_bench(t, m, v, bench_epochs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
