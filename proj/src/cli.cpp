#include "entail/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "entail/checkpoint.hpp"
#include "entail/heatmap.hpp"
#include "entail/report.hpp"
#include "entail/train.hpp"

namespace fs = std::filesystem;

namespace entail {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitIntegrity = 4;
constexpr int kExitNumeric = 5;

void require_input(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::exists(path))
    throw ConfigError(what + " path '" + path + "' does not exist");
}

struct ModelFlags {
  std::string model = "conditional";
  bool two_way = false;
  int k = 100;
  int embed_dim = 300;
  std::string classifier_hidden = "auto";

  ModelConfig to_config() const {
    ModelConfig cfg;
    cfg.variant = variant_from_string(model);
    cfg.two_way = two_way;
    cfg.k = k;
    cfg.embed_dim = embed_dim;
    if (classifier_hidden == "auto")
      cfg.classifier_hidden = -1;
    else if (classifier_hidden == "on")
      cfg.classifier_hidden = 1;
    else if (classifier_hidden == "off")
      cfg.classifier_hidden = 0;
    else
      throw ConfigError("classifier-hidden must be auto, on or off");
    cfg.validate();
    return cfg;
  }
};

void add_model_flags(CLI::App* cmd, ModelFlags& flags) {
  cmd->add_option("--model", flags.model, "model variant")
      ->check(CLI::IsMember({"conditional", "conditional-shared", "attention", "wordbyword"}));
  cmd->add_flag("--two-way", flags.two_way, "compose both attention directions");
  cmd->add_option("--k", flags.k, "hidden size");
  cmd->add_option("--embed-dim", flags.embed_dim, "word vector dimension");
  cmd->add_option("--classifier-hidden", flags.classifier_hidden,
                  "tanh layer before the softmax (auto|on|off)")
      ->check(CLI::IsMember({"auto", "on", "off"}));
}

struct TrainFlags {
  std::string data, dev, embeddings, out;
  TrainConfig cfg;
  std::string precision = "train";
};

void add_train_flags(CLI::App* cmd, TrainFlags& flags, bool with_lr = true) {
  cmd->add_option("--data", flags.data, "training corpus (SNLI json-lines)")->required();
  cmd->add_option("--dev", flags.dev, "validation corpus (defaults to the training data)");
  cmd->add_option("--embeddings", flags.embeddings, "pretrained word2vec text file");
  cmd->add_option("--out", flags.out, "output directory")->required();
  if (with_lr) {
    cmd->add_option("--lr", flags.cfg.lr, "learning rate");
    cmd->add_option("--dropout", flags.cfg.dropout, "dropout rate on network inputs/outputs");
    cmd->add_option("--l2", flags.cfg.l2, "l2 regularization strength");
  }
  cmd->add_option("--batch", flags.cfg.batch_size, "minibatch size");
  cmd->add_option("--epochs", flags.cfg.max_epochs, "maximum epochs");
  cmd->add_option("--patience", flags.cfg.patience, "early-stopping patience (0 disables)");
  cmd->add_option("--seed", flags.cfg.seed, "master seed");
  cmd->add_option("--jobs", flags.cfg.jobs, "worker threads");
  cmd->add_option("--precision", flags.precision, "arithmetic width")
      ->check(CLI::IsMember({"train", "check"}));
}

Vocabulary build_vocab(std::span<const Example> examples) {
  Vocabulary vocab;
  for (const Example& ex : examples) {
    for (const auto& t : ex.premise) vocab.add(t);
    for (const auto& t : ex.hypothesis) vocab.add(t);
  }
  return vocab;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

void write_resolved_config(const std::string& path, const std::string& command,
                           const ModelFlags& model, const TrainFlags& train, int vocab_size) {
  std::ofstream out(path);
  if (!out) throw DataError("resolved config: cannot open " + path + " for writing");
  out << "# resolved configuration (every default actually used)\n";
  out << "command = " << command << '\n';
  out << "model = " << model.model << '\n';
  out << "two-way = " << (model.two_way ? "true" : "false") << '\n';
  out << "k = " << model.k << '\n';
  out << "embed-dim = " << model.embed_dim << '\n';
  out << "classifier-hidden = " << model.classifier_hidden << '\n';
  out << "lr = " << format_double(train.cfg.lr) << '\n';
  out << "dropout = " << format_double(train.cfg.dropout) << '\n';
  out << "l2 = " << format_double(train.cfg.l2) << '\n';
  out << "batch = " << train.cfg.batch_size << '\n';
  out << "epochs = " << train.cfg.max_epochs << '\n';
  out << "patience = " << train.cfg.patience << '\n';
  out << "seed = " << train.cfg.seed << '\n';
  out << "jobs = " << train.cfg.jobs << '\n';
  out << "precision = " << train.precision << '\n';
  out << "data = " << train.data << '\n';
  out << "dev = " << (train.dev.empty() ? train.data : train.dev) << '\n';
  out << "embeddings = " << (train.embeddings.empty() ? "none" : train.embeddings) << '\n';
  out << "vocab-size = " << vocab_size << '\n';
}

struct LoadedData {
  std::vector<Example> train;
  std::vector<Example> dev;
  Vocabulary vocab;
  std::optional<Word2VecTable> pretrained;
};

LoadedData load_training_inputs(const TrainFlags& flags) {
  require_input(flags.data, "training data");
  if (!flags.dev.empty()) require_input(flags.dev, "dev data");
  if (!flags.embeddings.empty()) require_input(flags.embeddings, "embeddings");
  LoadedData data;
  ParseStats stats;
  data.train = parse_snli(flags.data, &stats);
  if (stats.skipped_no_consensus)
    std::cout << "skipped " << stats.skipped_no_consensus << " records without consensus\n";
  if (data.train.empty()) throw DataError("training data " + flags.data + " has no examples");
  data.dev = flags.dev.empty() ? data.train : parse_snli(flags.dev);
  data.vocab = build_vocab(data.train);
  if (!flags.embeddings.empty()) {
    data.pretrained = load_word2vec_text(flags.embeddings, data.vocab);
    std::cout << "embeddings: " << data.pretrained->rows.size() << " rows loaded, "
              << data.pretrained->missing << " vocabulary words missing\n";
  }
  return data;
}

template <typename T>
int run_train(const ModelFlags& model_flags, const TrainFlags& flags) {
  LoadedData data = load_training_inputs(flags);
  ModelConfig config = model_flags.to_config();
  fs::create_directories(flags.out);

  ModelState<T> model = init_model<T>(config, data.vocab,
                                      data.pretrained ? &*data.pretrained : nullptr,
                                      flags.cfg.seed);
  TrainResult<T> result = train<T>(model, data.train, data.dev, flags.cfg);
  for (const EpochRecord& e : result.history.epochs)
    std::cout << "epoch " << e.epoch << " train_loss=" << e.train_loss
              << " train_acc=" << e.train_acc << " dev_acc=" << e.dev_acc << '\n';

  save_checkpoint((fs::path(flags.out) / "checkpoint.json").string(), result.best);
  write_history_jsonl((fs::path(flags.out) / "history.jsonl").string(), result.history);
  result.best.vocab.dump((fs::path(flags.out) / "vocab.tsv").string());
  write_resolved_config((fs::path(flags.out) / "config.resolved").string(), "train", model_flags,
                        flags, data.vocab.size());
  if (result.history.diverged) {
    std::cerr << "training diverged at epoch " << result.history.diverged_epoch << '\n';
    return kExitNumeric;
  }
  std::cout << "best dev_acc=" << result.history.best_dev_acc << " at epoch "
            << result.history.best_epoch << '\n';
  return kExitOk;
}

template <typename T>
int run_grid(const ModelFlags& model_flags, const TrainFlags& flags, const Grids& grids) {
  LoadedData data = load_training_inputs(flags);
  ModelConfig config = model_flags.to_config();
  fs::create_directories(flags.out);

  GridResult<T> result =
      grid_search<T>(config, data.vocab, data.pretrained ? &*data.pretrained : nullptr,
                     data.train, data.dev, flags.cfg, grids, flags.cfg.jobs);
  write_grid_csv((fs::path(flags.out) / "grid.csv").string(), result.ranked);
  save_checkpoint((fs::path(flags.out) / "checkpoint.json").string(), result.best_run.best);
  write_history_jsonl((fs::path(flags.out) / "history.jsonl").string(),
                      result.best_run.history);
  TrainFlags winner = flags;
  winner.cfg = result.best_config;
  write_resolved_config((fs::path(flags.out) / "config.resolved").string(), "grid", model_flags,
                        winner, data.vocab.size());
  std::cout << "grid winner: lr=" << result.best_config.lr
            << " dropout=" << result.best_config.dropout << " l2=" << result.best_config.l2
            << " dev_acc=" << result.ranked.front().best_dev_acc << '\n';
  return kExitOk;
}

template <typename T>
int run_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& out, int jobs) {
  require_input(checkpoint, "checkpoint");
  require_input(data_path, "eval data");
  ModelState<T> state = load_checkpoint<T>(checkpoint);
  std::vector<Example> examples = parse_snli(data_path);
  EvalMetrics metrics = evaluate(state, examples, jobs);
  const std::string body = metrics_json(metrics);
  std::cout << body << '\n';
  if (!out.empty()) write_metrics_json(out, metrics);
  return kExitOk;
}

template <typename T>
int run_predict(const std::string& checkpoint, const std::string& premise,
                const std::string& hypothesis, const std::string& out) {
  require_input(checkpoint, "checkpoint");
  ModelState<T> state = load_checkpoint<T>(checkpoint);
  const auto prem = tokenize(premise);
  const auto hyp = tokenize(hypothesis);
  if (prem.empty() || hyp.empty())
    throw DataError("predict: premise and hypothesis must contain tokens");
  Prediction pred = predict(state, prem, hyp);
  nlohmann::json j{{"premise", prem},
                   {"hypothesis", hyp},
                   {"probs",
                    {{"entailment", pred.probs[0]},
                     {"neutral", pred.probs[1]},
                     {"contradiction", pred.probs[2]}}},
                   {"predicted", label_name(pred.predicted)}};
  std::cout << j.dump(1) << '\n';
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw DataError("predict: cannot open " + out + " for writing");
    f << j.dump(1) << '\n';
  }
  return kExitOk;
}

template <typename T>
int run_attend(const std::string& checkpoint, const std::string& premise,
               const std::string& hypothesis, const std::string& gold, const std::string& out) {
  require_input(checkpoint, "checkpoint");
  ModelState<T> state = load_checkpoint<T>(checkpoint);
  if (!variant_has_attention(state.config.variant))
    throw ConfigError("attend: checkpoint variant '" + state.config.name() +
                      "' produces no attention weights");
  const auto prem = tokenize(premise);
  const auto hyp = tokenize(hypothesis);
  if (prem.empty() || hyp.empty())
    throw DataError("attend: premise and hypothesis must contain tokens");
  Prediction pred = predict(state, prem, hyp);
  AttentionRecord record = *pred.attention;
  record.gold = gold;
  fs::create_directories(out);
  write_attention_record((fs::path(out) / "attention.json").string(), record);
  write_heatmap_svg((fs::path(out) / "attention.svg").string(), record);
  std::cout << "predicted " << record.predicted << "; wrote attention.json and attention.svg to "
            << out << '\n';
  return kExitOk;
}

int run_params(const ModelFlags& model_flags, const std::string& data_path,
               const std::string& embeddings_path) {
  ModelConfig config = model_flags.to_config();
  ParamCount count = count_params(config);
  std::cout << "model " << config.name() << " (k=" << config.k << ", d=" << config.embed_dim
            << ", classifier " << (config.hidden_layer() ? "tanh+softmax" : "softmax-only")
            << ")\n";
  std::cout << "counting assumptions: projection with bias; four gate matrices [k x 2k] plus "
               "biases; attention maps without biases; classifier "
            << (config.hidden_layer() ? "[k x " + std::to_string(config.classifier_input()) +
                                            "]+[k] then [3 x k]+[3]"
                                      : "[3 x " + std::to_string(config.classifier_input()) +
                                            "]+[3]")
            << "\n";
  for (const auto& g : count.groups)
    std::cout << "  " << g.name << ": " << g.count << '\n';
  std::cout << "theta_M total: " << count.total << '\n';

  for (const TableReference& ref : table_references()) {
    if (ref.variant != config.variant || ref.two_way != config.two_way || ref.k != config.k)
      continue;
    const double dev = std::abs(static_cast<double>(count.total) -
                                static_cast<double>(ref.reported)) /
                       static_cast<double>(ref.reported);
    std::cout << "reported value " << ref.reported << ": deviation "
              << format_double(dev * 100.0) << "%";
    if (ref.gating)
      std::cout << (dev <= 0.05 ? " (within 5%)" : " (EXCEEDS 5%)");
    else
      std::cout << " (informational; not derivable from the documented assumptions)";
    std::cout << '\n';
  }

  if (!data_path.empty()) {
    require_input(data_path, "data");
    std::vector<Example> examples = parse_snli(data_path);
    Vocabulary vocab = build_vocab(examples);
    std::optional<Word2VecTable> pretrained;
    if (!embeddings_path.empty()) {
      require_input(embeddings_path, "embeddings");
      pretrained = load_word2vec_text(embeddings_path, vocab);
    }
    EmbeddingTable<double> table = EmbeddingTable<double>::build(
        vocab, config.embed_dim, pretrained ? &*pretrained : nullptr, 0);
    std::cout << "vocabulary: " << vocab.size() << " tokens, " << table.tunable_rows()
              << " tunable rows\n";
    std::cout << "theta_W+M total: " << count.total + table.tunable_value_count() << '\n';
  }
  return kExitOk;
}

int run_synth(const std::string& out, const SynthSpec& spec, int test_size) {
  SynthSpec full = spec;
  full.size = spec.size + test_size;
  SynthData data = gen_synth(full);
  fs::create_directories(out);
  SynthData train_part, test_part;
  train_part.vocab_tokens = data.vocab_tokens;
  test_part.vocab_tokens = data.vocab_tokens;
  for (size_t i = 0; i < data.examples.size(); ++i) {
    auto& dst = i < static_cast<size_t>(spec.size) ? train_part : test_part;
    dst.examples.push_back(data.examples[i]);
    dst.alignments.push_back(data.alignments[i]);
  }
  write_snli_jsonl((fs::path(out) / "train.jsonl").string(), train_part.examples);
  write_snli_jsonl((fs::path(out) / "test.jsonl").string(), test_part.examples);
  write_alignment_json((fs::path(out) / "train_alignment.json").string(), train_part);
  write_alignment_json((fs::path(out) / "test_alignment.json").string(), test_part);
  std::cout << "wrote " << train_part.examples.size() << " train / " << test_part.examples.size()
            << " test examples to " << out << '\n';
  return kExitOk;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Expands "--config FILE" ("key = value" lines, '#' comments) into
// "--key=value" tokens appended to the argument list. Keys already given on
// the command line are skipped, so explicit flags win.
std::vector<std::string> expand_config_file(std::vector<std::string> args) {
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  if (!fs::exists(path)) throw ConfigError("config file '" + path + "' does not exist");
  std::ifstream in(path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.resize(comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config file " + path + ": line " + std::to_string(lineno) +
                        " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config file " + path + ": line " + std::to_string(lineno) +
                        " is not 'key = value'");
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args)
      given |= a == flag || a.rfind(flag + "=", 0) == 0;
    if (!given) args.push_back(flag + "=" + value);
  }
  return args;
}

std::vector<double> parse_grid_list(const std::string& csv) {
  std::vector<double> values;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    values.push_back(std::stod(item));
  }
  if (values.empty()) throw ConfigError("grid list '" + csv + "' is empty");
  return values;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"LSTM textual-entailment models with neural attention"};
  app.require_subcommand(1);

  ModelFlags model_flags;
  TrainFlags train_flags;

  CLI::App* cmd_train = app.add_subcommand("train", "train one configuration");
  std::string train_config_file;
  cmd_train->add_option("--config", train_config_file,
                        "key = value config file (explicit flags win)");
  add_model_flags(cmd_train, model_flags);
  add_train_flags(cmd_train, train_flags);

  CLI::App* cmd_grid = app.add_subcommand("grid", "grid-search lr/dropout/l2");
  std::string grid_config_file;
  cmd_grid->add_option("--config", grid_config_file,
                       "key = value config file (explicit flags win)");
  ModelFlags grid_model_flags;
  TrainFlags grid_train_flags;
  std::string lrs = "1e-4,3e-4,1e-3";
  std::string dropouts = "0.0,0.1,0.2";
  std::string l2s = "0.0,1e-4,3e-4,1e-3";
  add_model_flags(cmd_grid, grid_model_flags);
  add_train_flags(cmd_grid, grid_train_flags, /*with_lr=*/false);
  cmd_grid->add_option("--lrs", lrs, "learning-rate grid (comma separated)");
  cmd_grid->add_option("--dropouts", dropouts, "dropout grid");
  cmd_grid->add_option("--l2s", l2s, "l2 grid");

  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_checkpoint, eval_data, eval_out;
  int eval_jobs = 1;
  std::string eval_precision = "train";
  cmd_eval->add_option("--checkpoint", eval_checkpoint)->required();
  cmd_eval->add_option("--data", eval_data)->required();
  cmd_eval->add_option("--out", eval_out, "metrics JSON path");
  cmd_eval->add_option("--jobs", eval_jobs);
  cmd_eval->add_option("--precision", eval_precision)->check(CLI::IsMember({"train", "check"}));

  CLI::App* cmd_predict = app.add_subcommand("predict", "classify one sentence pair");
  std::string pr_checkpoint, pr_premise, pr_hypothesis, pr_out, pr_precision = "train";
  cmd_predict->add_option("--checkpoint", pr_checkpoint)->required();
  cmd_predict->add_option("--premise", pr_premise)->required();
  cmd_predict->add_option("--hypothesis", pr_hypothesis)->required();
  cmd_predict->add_option("--out", pr_out);
  cmd_predict->add_option("--precision", pr_precision)
      ->check(CLI::IsMember({"train", "check"}));

  CLI::App* cmd_attend = app.add_subcommand("attend", "emit attention weights and heatmap");
  std::string at_checkpoint, at_premise, at_hypothesis, at_gold, at_out, at_precision = "train";
  cmd_attend->add_option("--checkpoint", at_checkpoint)->required();
  cmd_attend->add_option("--premise", at_premise)->required();
  cmd_attend->add_option("--hypothesis", at_hypothesis)->required();
  cmd_attend->add_option("--gold", at_gold, "gold label for the record");
  cmd_attend->add_option("--out", at_out, "output directory")->required();
  cmd_attend->add_option("--precision", at_precision)
      ->check(CLI::IsMember({"train", "check"}));

  CLI::App* cmd_params = app.add_subcommand("params", "parameter-count audit");
  ModelFlags params_model_flags;
  std::string params_data, params_embeddings;
  add_model_flags(cmd_params, params_model_flags);
  cmd_params->add_option("--data", params_data, "corpus for the theta_W+M count");
  cmd_params->add_option("--embeddings", params_embeddings, "word2vec text file");

  CLI::App* cmd_synth = app.add_subcommand("synth", "generate the planted-correspondence task");
  SynthSpec synth_spec;
  std::string synth_out;
  int synth_test = 500;
  cmd_synth->add_option("--out", synth_out)->required();
  cmd_synth->add_option("--size", synth_spec.size, "training examples");
  cmd_synth->add_option("--test-size", synth_test, "held-out examples");
  cmd_synth->add_option("--vocab", synth_spec.vocab_size);
  cmd_synth->add_option("--seed", synth_spec.seed);
  cmd_synth->add_option("--premise-min", synth_spec.premise_min);
  cmd_synth->add_option("--premise-max", synth_spec.premise_max);
  cmd_synth->add_option("--hyp-min", synth_spec.hyp_min);
  cmd_synth->add_option("--hyp-max", synth_spec.hyp_max);

  try {
    args = expand_config_file(std::move(args));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  std::vector<const char*> argv;
  argv.push_back("entail");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (cmd_train->parsed()) {
      return train_flags.precision == "check" ? run_train<double>(model_flags, train_flags)
                                              : run_train<float>(model_flags, train_flags);
    }
    if (cmd_grid->parsed()) {
      Grids grids;
      grids.lrs = parse_grid_list(lrs);
      grids.dropouts = parse_grid_list(dropouts);
      grids.l2s = parse_grid_list(l2s);
      return grid_train_flags.precision == "check"
                 ? run_grid<double>(grid_model_flags, grid_train_flags, grids)
                 : run_grid<float>(grid_model_flags, grid_train_flags, grids);
    }
    if (cmd_eval->parsed()) {
      return eval_precision == "check"
                 ? run_eval<double>(eval_checkpoint, eval_data, eval_out, eval_jobs)
                 : run_eval<float>(eval_checkpoint, eval_data, eval_out, eval_jobs);
    }
    if (cmd_predict->parsed()) {
      return pr_precision == "check"
                 ? run_predict<double>(pr_checkpoint, pr_premise, pr_hypothesis, pr_out)
                 : run_predict<float>(pr_checkpoint, pr_premise, pr_hypothesis, pr_out);
    }
    if (cmd_attend->parsed()) {
      return at_precision == "check"
                 ? run_attend<double>(at_checkpoint, at_premise, at_hypothesis, at_gold, at_out)
                 : run_attend<float>(at_checkpoint, at_premise, at_hypothesis, at_gold, at_out);
    }
    if (cmd_params->parsed())
      return run_params(params_model_flags, params_data, params_embeddings);
    if (cmd_synth->parsed()) return run_synth(synth_out, synth_spec, synth_test);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}

}  // namespace entail
