// SPDX-License-Identifier: Apache-2.0
#include "bofnet/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "bofnet/asm_pipeline.hpp"
#include "bofnet/config.hpp"
#include "bofnet/corpus.hpp"
#include "bofnet/error.hpp"
#include "bofnet/experiment.hpp"
#include "bofnet/model.hpp"
#include "bofnet/training.hpp"
#include "bofnet/vocabulary.hpp"

namespace fs = std::filesystem;

namespace bofnet::cli {

namespace {

// Flags that map straight onto config keys. Applied after --config so the
// command line wins.
struct Overrides {
  std::optional<std::string> config_file;
  std::vector<std::string> assignments;  // --set key=value
  std::map<std::string, std::string> flags;
  std::optional<std::uint64_t> seed;

  void add_config(CLI::App* app) {
    app->add_option("--config", config_file, "INI config file (defaults < file < flags)")->check(CLI::ExistingFile);
    app->add_option("--set", assignments, "override any config key, e.g. --set train.max_epochs=5");
  }
  void add_seed(CLI::App* app) { app->add_option("--seed", seed, "sets corpus, split, model and train seeds"); }
  void add_flag(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { flags[key] = v; }, help + " [" + key + "]");
  }

  void apply(config::RunConfig& cfg) const {
    if (config_file) config::apply_file(cfg, *config_file);
    if (seed) {
      for (auto key : {"corpus.seed", "split.seed", "model.seed", "train.seed"}) {
        config::set(cfg, key, std::to_string(*seed));
      }
    }
    for (const auto& [key, value] : flags) config::set(cfg, key, value);
    for (const auto& a : assignments) {
      auto eq = a.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--set expects key=value, got '" + a + "'");
      config::set(cfg, a.substr(0, eq), a.substr(eq + 1));
    }
  }
};

void add_corpus_flags(CLI::App* app, Overrides& o) {
  o.add_flag(app, "--positive", "corpus.positive", "number of positive (safe) programs");
  o.add_flag(app, "--negative", "corpus.negative", "number of negative (vulnerable) programs");
  o.add_flag(app, "--functions", "corpus.functions_per_program", "functions per program");
  o.add_flag(app, "--safe-pool", "corpus.safe_pool", "AllSafe, ExcludeRepaired or OnlyRepairedOf(<call>)");
  o.add_flag(app, "--vulnerable-pool", "corpus.vulnerable_pool", "AllVulnerable or OnlyCall(<call>)");
}

void add_split_flags(CLI::App* app, Overrides& o) {
  o.add_flag(app, "--test-fraction", "split.test_fraction", "held-out test share");
  o.add_flag(app, "--dev-fraction", "split.dev_fraction_of_train", "development share of the training pool");
}

void add_train_flags(CLI::App* app, Overrides& o) {
  o.add_flag(app, "--batch-size", "train.batch_size", "mini-batch size");
  o.add_flag(app, "--lr", "train.learning_rate", "learning rate");
  o.add_flag(app, "--max-epochs", "train.max_epochs", "epoch budget");
  o.add_flag(app, "--patience", "train.early_stop_patience", "early stopping patience in epochs (0 = off)");
  o.add_flag(app, "--optimizer", "train.optimizer", "adam or sgd");
  o.add_flag(app, "--clip", "train.clip_norm", "global gradient norm clip, or none");
  o.add_flag(app, "--embed-dim", "model.embed_dim", "embedding size");
  o.add_flag(app, "--hidden-dim", "model.hidden_dim", "LSTM hidden size");
  o.add_flag(app, "--layers", "model.num_layers", "stacked LSTM layers");
  o.add_flag(app, "--dropout", "model.dropout_rate", "dropout rate on the top LSTM output");
  o.add_flag(app, "--forget-bias", "model.forget_bias", "initial forget-gate bias");
  o.add_flag(app, "--input-bias", "model.input_bias", "initial input-gate bias");
}

fs::path partition_file(const fs::path& dir, std::string_view partition, std::string_view encoding) {
  return dir / (std::string(partition) + "." + std::string(encoding) + ".jsonl");
}

// Encoded partition if present, otherwise the token partition encoded with `vocab`.
std::vector<train::EncodedSample> load_partition(const fs::path& dir, std::string_view partition,
                                                 const asmpipe::Vocabulary& vocab) {
  auto tokens = partition_file(dir, partition, "tokens");
  if (fs::exists(tokens)) return train::encode(vocab, train::read_token_dataset(tokens));
  auto ids = partition_file(dir, partition, "ids");
  if (fs::exists(ids)) return train::read_encoded_dataset(ids);
  throw Error(ErrorCode::Io, "no " + std::string(partition) + " partition in " + dir.string());
}

void print_line(std::ostream& os, const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  os << buf << '\n';
}

class Commands {
 public:
  Commands(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  void install(CLI::App& app) {
    install_generate(app);
    install_compile(app);
    install_preprocess(app);
    install_vocab(app);
    install_train(app);
    install_eval(app);
    install_predict(app);
    install_experiment(app);
  }

  int run(CLI::App& app) {
    for (auto* sub : app.get_subcommands()) {
      auto it = actions_.find(sub->get_name());
      if (it != actions_.end()) return it->second();
    }
    return kExitUsage;
  }

 private:
  void log(const std::string& msg) const {
    if (!quiet_) err_ << msg << std::endl;
  }

  void install_generate(CLI::App& app) {
    auto* cmd = app.add_subcommand("generate", "generate a labeled C corpus");
    cmd->add_option("--out", out_dir_, "corpus directory")->required();
    cmd->add_option("--preset", preset_, "start from an experiment preset's corpus settings");
    overrides_.add_config(cmd);
    overrides_.add_seed(cmd);
    add_corpus_flags(cmd, overrides_);
    actions_["generate"] = [this] {
      auto cfg = resolve();
      auto samples = corpus::generate_corpus(corpus::function_library(), cfg.spec.corpus);
      corpus::write_corpus(out_dir_, samples);
      config::write_echo(out_dir_, cfg);
      out_ << "wrote " << samples.size() << " programs to " << out_dir_.string() << '\n';
      return kExitOk;
    };
  }

  void install_compile(CLI::App& app) {
    auto* cmd = app.add_subcommand("compile", "compile a corpus to Intel-syntax assembly (existing .s files are kept)");
    cmd->add_option("--corpus", corpus_dir_, "corpus directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--out", out_dir_, "assembly directory")->required();
    overrides_.add_config(cmd);
    overrides_.add_flag(cmd, "--compiler-command", "compile.command", "command template with {input} and {output}");
    actions_["compile"] = [this] {
      auto cfg = resolve();
      auto stats = experiment::compile_corpus(corpus_dir_, out_dir_, cfg.compile_command,
                                              [this](const std::string& m) { log(m); });
      config::write_echo(out_dir_, cfg);
      out_ << "compiled " << stats.compiled << ", skipped " << stats.skipped << '\n';
      return kExitOk;
    };
  }

  void install_preprocess(CLI::App& app) {
    auto* cmd = app.add_subcommand("preprocess", "normalize, tokenize and split; encode when --vocab is given");
    cmd->add_option("--corpus", corpus_dir_, "corpus directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--asm", asm_dir_, "assembly directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--out", out_dir_, "dataset directory")->required();
    cmd->add_option("--vocab", vocab_path_, "vocabulary used to write encoded partitions")
        ->check(CLI::ExistingFile);
    overrides_.add_config(cmd);
    overrides_.add_seed(cmd);
    add_split_flags(cmd, overrides_);
    actions_["preprocess"] = [this] {
      auto cfg = resolve();
      auto data = experiment::prepare(experiment::tokenize_corpus(corpus_dir_, asm_dir_), cfg.spec.split);
      experiment::write_token_partitions(out_dir_, data);
      if (vocab_path_) {
        auto vocab = asmpipe::Vocabulary::load(*vocab_path_);
        data.train = train::encode(vocab, data.train_tokens);
        data.dev = train::encode(vocab, data.dev_tokens);
        data.test = train::encode(vocab, data.test_tokens);
        experiment::write_encoded_partitions(out_dir_, data);
      }
      config::write_echo(out_dir_, cfg);
      out_ << "train " << data.train_tokens.size() << ", dev " << data.dev_tokens.size() << ", test "
           << data.test_tokens.size() << '\n';
      return kExitOk;
    };
  }

  void install_vocab(CLI::App& app) {
    auto* cmd = app.add_subcommand("vocab", "build the vocabulary from the training partition");
    cmd->add_option("--data", data_dir_, "dataset directory from preprocess")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--out", file_out_, "vocabulary file")->required();
    actions_["vocab"] = [this] {
      auto vocab = train::build_vocabulary(train::read_token_dataset(partition_file(data_dir_, "train", "tokens")));
      vocab.save(file_out_);
      out_ << "vocabulary of " << vocab.size() << " entries written to " << file_out_.string() << '\n';
      return kExitOk;
    };
  }

  void install_train(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "train a classifier on a preprocessed dataset");
    cmd->add_option("--data", data_dir_, "dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--vocab", vocab_path_, "vocabulary file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out_dir_, "run directory for model.bin and metrics.jsonl")->required();
    overrides_.add_config(cmd);
    overrides_.add_seed(cmd);
    add_train_flags(cmd, overrides_);
    cmd->add_flag("--quiet", quiet_, "no progress on stderr");
    actions_["train"] = [this] {
      auto cfg = resolve();
      auto vocab = asmpipe::Vocabulary::load(*vocab_path_);
      auto train_set = load_partition(data_dir_, "train", vocab);
      auto dev_set = load_partition(data_dir_, "dev", vocab);
      auto model_cfg = cfg.spec.model;
      model_cfg.vocab_size = vocab.size();
      experiment::GridCell cell{cfg.spec.train.batch_size, cfg.spec.train.learning_rate, false};
      auto id = experiment::config_id(cell);

      fs::create_directories(out_dir_);
      config::write_echo(out_dir_, cfg);
      std::ofstream metrics(out_dir_ / "metrics.jsonl", std::ios::binary | std::ios::trunc);
      metrics << experiment::metrics_header_line() << '\n';
      auto result = train::train(train_set, dev_set, model_cfg, cfg.spec.train, [&](const train::MetricRecord& r) {
        metrics << experiment::metrics_line(cfg.spec.name, id, r) << '\n';
        if (r.kind == train::MetricRecord::Kind::Epoch) {
          log("epoch " + std::to_string(r.epoch) + " train_loss " + std::to_string(r.train_loss) + " dev_ccr " +
              std::to_string(*r.dev_ccr));
        }
      });
      nn::save_model(out_dir_ / "model.bin", result.params, vocab.content_hash());
      out_ << "best epoch " << result.metrics.best_epoch << '\n';
      print_line(out_, "dev_ccr %.6f", result.metrics.best_dev_ccr);
      return kExitOk;
    };
  }

  void install_eval(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "evaluate a model on one partition");
    cmd->add_option("--model", model_path_, "model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--vocab", vocab_path_, "vocabulary file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--data", data_dir_, "dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--partition", partition_, "train, dev or test")
        ->check(CLI::IsMember({"train", "dev", "test"}));
    actions_["eval"] = [this] {
      auto vocab = asmpipe::Vocabulary::load(*vocab_path_);
      auto model = nn::load_model(model_path_, vocab.content_hash());
      auto ev = train::evaluate(model.params, load_partition(data_dir_, partition_, vocab));
      print_line(out_, "ccr %.6f", ev.ccr);
      print_line(out_, "loss %.6f", ev.loss);
      out_ << "count " << ev.count << '\n';
      return kExitOk;
    };
  }

  void install_predict(CLI::App& app) {
    auto* cmd = app.add_subcommand("predict", "classify one .s or .c file");
    cmd->add_option("--model", model_path_, "model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--vocab", vocab_path_, "vocabulary file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--compiler-command", compile_command_, "command template used for .c input");
    cmd->add_option("file", input_, ".s or .c file")->required()->check(CLI::ExistingFile);
    actions_["predict"] = [this] {
      auto vocab = asmpipe::Vocabulary::load(*vocab_path_);
      auto model = nn::load_model(model_path_, vocab.content_hash());
      auto unit = input_.extension() == ".c" ? asmpipe::compile_c(input_, compile_command_)
                                              : asmpipe::load_asm(input_, input_.stem().string());
      auto stream = asmpipe::tokenize(asmpipe::normalize(unit));
      if (stream.tokens.empty()) throw Error(ErrorCode::EmptyOutput, "no tokens left after normalization");
      std::vector<std::vector<std::int32_t>> seqs{vocab.encode(stream)};
      auto p = nn::predict(model.params, nn::Batch::from_sequences(seqs, asmpipe::kPadId))[0];
      print_line(out_, "probability_safe %.6f", p);
      out_ << (train::predicted_label(p) == corpus::Label::Positive ? "SAFE" : "VULNERABLE") << '\n';
      return kExitOk;
    };
  }

  void install_experiment(CLI::App& app) {
    auto* cmd = app.add_subcommand("experiment", "run an experiment preset end to end");
    cmd->add_option("name", preset_, "Sim1, Sim2, Sim3, Sim1-desk, Sim2-desk or Sim3-desk");
    cmd->add_option("--out", out_dir_, "run directory")->required();
    cmd->add_flag("--best-only", best_only_, "train only the preset's best-known grid cell");
    cmd->add_flag("--quiet", quiet_, "no progress on stderr");
    overrides_.add_config(cmd);
    overrides_.add_seed(cmd);
    add_corpus_flags(cmd, overrides_);
    add_split_flags(cmd, overrides_);
    add_train_flags(cmd, overrides_);
    overrides_.add_flag(cmd, "--grid", "experiment.grid", "grid cells as batch:lr,batch:lr");
    overrides_.add_flag(cmd, "--compiler-command", "compile.command", "command template with {input} and {output}");
    actions_["experiment"] = [this] {
      auto cfg = resolve();
      if (best_only_) {
        if (!cfg.spec.best_known) {
          throw CLI::ValidationError("--best-only", cfg.spec.name + " has no best-known cell; use --grid instead");
        }
        cfg.spec.grid = {*cfg.spec.best_known};
      }
      config::write_echo(out_dir_, cfg);
      experiment::RunOptions opts;
      opts.out_dir = out_dir_;
      opts.compile_command = cfg.compile_command;
      opts.log = [this](const std::string& m) { log(m); };
      auto report = experiment::run_experiment(cfg.spec, opts);
      out_ << experiment::render_report(cfg.spec, report);
      return report.best ? kExitOk : kExitFailure;
    };
  }

  // Preset (if any) < config file < flags.
  config::RunConfig resolve() const {
    config::RunConfig cfg;
    std::optional<std::string> name = preset_;
    if (!name && overrides_.config_file) {
      config::RunConfig probe;
      config::apply_file(probe, *overrides_.config_file);
      if (probe.spec.name != "Custom") name = probe.spec.name;
    }
    if (name) {
      auto preset = experiment::find_preset(*name);
      if (!preset) throw CLI::ValidationError("name", "unknown preset '" + *name + "'");
      cfg.spec = *preset;
    }
    try {
      overrides_.apply(cfg);
    } catch (const Error& e) {
      throw CLI::ValidationError(e.what());
    }
    return cfg;
  }

  std::ostream& out_;
  std::ostream& err_;
  std::map<std::string, std::function<int()>> actions_;
  Overrides overrides_;
  std::optional<std::string> preset_;
  fs::path out_dir_;
  fs::path corpus_dir_;
  fs::path asm_dir_;
  fs::path data_dir_;
  fs::path file_out_;
  fs::path model_path_;
  fs::path input_;
  std::optional<fs::path> vocab_path_;
  std::string partition_ = "test";
  std::string compile_command_ = std::string(asmpipe::kDefaultCompileCommand);
  bool best_only_ = false;
  bool quiet_ = false;
};

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Buffer-overflow detection on assembly with an LSTM classifier", "bofnet");
  app.require_subcommand(1);
  Commands commands(out, err);
  commands.install(app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    return commands.run(app);
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace bofnet::cli
