// SPDX-License-Identifier: Apache-2.0
#include "bofnet/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bofnet/error.hpp"

namespace bofnet::config {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw Error(ErrorCode::InvalidArgument,
              "bad value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                  std::string(expected) + ")");
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(key, value, std::is_floating_point_v<T> ? "a number" : "a non-negative integer");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "true or false");
}

std::string show(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
};

template <typename T>
Field numeric(T experiment::ExperimentSpec::*group, auto member) {
  return {[=](const RunConfig& c) { return show((c.spec.*group).*member); },
          [=](RunConfig& c, std::string_view key, std::string_view v) {
            using V = std::remove_reference_t<decltype((c.spec.*group).*member)>;
            (c.spec.*group).*member = parse_number<V>(key, v);
          }};
}

// Ordered as written to the echo file.
const std::vector<std::pair<std::string, Field>>& fields() {
  using experiment::ExperimentSpec;
  using corpus::CorpusSpec;
  static const std::vector<std::pair<std::string, Field>> table = {
      {"experiment.name",
       {[](const RunConfig& c) { return c.spec.name; },
        [](RunConfig& c, std::string_view, std::string_view v) { c.spec.name = std::string(v); }}},
      {"experiment.grid",
       {[](const RunConfig& c) { return experiment::format_grid(c.spec.grid); },
        [](RunConfig& c, std::string_view, std::string_view v) { c.spec.grid = experiment::parse_grid(v); }}},
      {"corpus.positive", numeric(&ExperimentSpec::corpus, &CorpusSpec::n_positive)},
      {"corpus.negative", numeric(&ExperimentSpec::corpus, &CorpusSpec::n_negative)},
      {"corpus.functions_per_program", numeric(&ExperimentSpec::corpus, &CorpusSpec::functions_per_program)},
      {"corpus.safe_pool",
       {[](const RunConfig& c) { return corpus::to_string(c.spec.corpus.safe_pool); },
        [](RunConfig& c, std::string_view, std::string_view v) {
          c.spec.corpus.safe_pool = corpus::parse_safe_filter(v);
        }}},
      {"corpus.vulnerable_pool",
       {[](const RunConfig& c) { return corpus::to_string(c.spec.corpus.vulnerable_pool); },
        [](RunConfig& c, std::string_view, std::string_view v) {
          c.spec.corpus.vulnerable_pool = corpus::parse_vulnerable_filter(v);
        }}},
      {"corpus.seed", numeric(&ExperimentSpec::corpus, &CorpusSpec::seed)},
      {"split.test_fraction", numeric(&ExperimentSpec::split, &train::SplitSpec::test_fraction)},
      {"split.dev_fraction_of_train", numeric(&ExperimentSpec::split, &train::SplitSpec::dev_fraction_of_train)},
      {"split.stratify",
       {[](const RunConfig& c) { return show(c.spec.split.stratify); },
        [](RunConfig& c, std::string_view k, std::string_view v) { c.spec.split.stratify = parse_bool(k, v); }}},
      {"split.seed", numeric(&ExperimentSpec::split, &train::SplitSpec::seed)},
      {"model.embed_dim", numeric(&ExperimentSpec::model, &nn::ModelConfig::embed_dim)},
      {"model.hidden_dim", numeric(&ExperimentSpec::model, &nn::ModelConfig::hidden_dim)},
      {"model.num_layers", numeric(&ExperimentSpec::model, &nn::ModelConfig::num_layers)},
      {"model.dropout_rate", numeric(&ExperimentSpec::model, &nn::ModelConfig::dropout_rate)},
      {"model.forget_bias", numeric(&ExperimentSpec::model, &nn::ModelConfig::forget_bias)},
      {"model.input_bias", numeric(&ExperimentSpec::model, &nn::ModelConfig::input_bias)},
      {"model.seed", numeric(&ExperimentSpec::model, &nn::ModelConfig::seed)},
      {"train.batch_size", numeric(&ExperimentSpec::train, &train::TrainConfig::batch_size)},
      {"train.learning_rate", numeric(&ExperimentSpec::train, &train::TrainConfig::learning_rate)},
      {"train.max_epochs", numeric(&ExperimentSpec::train, &train::TrainConfig::max_epochs)},
      {"train.early_stop_patience", numeric(&ExperimentSpec::train, &train::TrainConfig::early_stop_patience)},
      {"train.clip_norm",
       {[](const RunConfig& c) { return c.spec.train.clip_norm ? show(*c.spec.train.clip_norm) : "none"; },
        [](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "none") {
            c.spec.train.clip_norm.reset();
          } else {
            c.spec.train.clip_norm = parse_number<double>(k, v);
          }
        }}},
      {"train.optimizer",
       {[](const RunConfig& c) {
          return std::string(c.spec.train.optimizer == train::Optimizer::Adam ? "adam" : "sgd");
        },
        [](RunConfig& c, std::string_view k, std::string_view v) {
          if (v == "adam") {
            c.spec.train.optimizer = train::Optimizer::Adam;
          } else if (v == "sgd") {
            c.spec.train.optimizer = train::Optimizer::Sgd;
          } else {
            bad_value(k, v, "adam or sgd");
          }
        }}},
      {"train.seed", numeric(&ExperimentSpec::train, &train::TrainConfig::seed)},
      {"train.log_every_steps", numeric(&ExperimentSpec::train, &train::TrainConfig::log_every_steps)},
      {"train.eval_batch_size", numeric(&ExperimentSpec::train, &train::TrainConfig::eval_batch_size)},
      {"compile.command",
       {[](const RunConfig& c) { return c.compile_command; },
        [](RunConfig& c, std::string_view, std::string_view v) { c.compile_command = std::string(v); }}},
  };
  return table;
}

const Field& field(std::string_view key) {
  for (const auto& [name, f] : fields()) {
    if (name == key) return f;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

}  // namespace

void set(RunConfig& cfg, std::string_view key, std::string_view value) { field(key).set(cfg, key, value); }

std::string get(const RunConfig& cfg, std::string_view key) { return field(key).get(cfg); }

std::vector<std::string> keys() {
  std::vector<std::string> out;
  for (const auto& entry : fields()) out.push_back(entry.first);
  return out;
}

void apply_text(RunConfig& cfg, const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw Error(ErrorCode::InvalidArgument, "config key '" + section + "' is outside a section");
    for (const auto& [key, value] : body) set(cfg, section + "." + key, value.data());
  }
}

void apply_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_text(cfg, buf.str());
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& [name, f] : fields()) {
    auto dot = name.find('.');
    auto sec = name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << name.substr(dot + 1) << " = " << f.get(cfg) << '\n';
  }
  return os.str();
}

void write_echo(const std::filesystem::path& dir, const RunConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / kEchoName, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / kEchoName).string());
  out << to_ini(cfg);
}

}  // namespace bofnet::config
