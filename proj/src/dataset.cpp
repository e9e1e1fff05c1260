// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "bofnet/error.hpp"
#include "bofnet/random.hpp"
#include "bofnet/training.hpp"

using json = nlohmann::json;

namespace bofnet::train {

double target(corpus::Label label) { return label == corpus::Label::Positive ? 1.0 : 0.0; }

corpus::Label predicted_label(double probability) {
  return probability >= kThreshold ? corpus::Label::Positive : corpus::Label::Negative;
}

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0) || !(dev_fraction_of_train > 0.0 && dev_fraction_of_train < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "split fractions must lie in (0, 1)");
  }
}

namespace {

std::size_t rounded_share(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

void split_group(std::vector<std::size_t> group, const SplitSpec& spec, std::mt19937_64& rng, Partition& out) {
  shuffle(group, rng);
  const std::size_t n_test = rounded_share(group.size(), spec.test_fraction);
  const std::size_t n_dev = rounded_share(group.size() - n_test, spec.dev_fraction_of_train);
  out.test.insert(out.test.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_test));
  out.dev.insert(out.dev.end(), group.begin() + static_cast<std::ptrdiff_t>(n_test),
                 group.begin() + static_cast<std::ptrdiff_t>(n_test + n_dev));
  out.train.insert(out.train.end(), group.begin() + static_cast<std::ptrdiff_t>(n_test + n_dev), group.end());
}

}  // namespace

Partition split_dataset(std::span<const corpus::Label> labels, const SplitSpec& spec) {
  spec.validate();
  if (labels.size() < kMinSplitSamples) {
    throw Error(ErrorCode::TooFewSamples,
                "need at least " + std::to_string(kMinSplitSamples) + " samples, got " + std::to_string(labels.size()));
  }
  std::mt19937_64 rng(derive_seed(spec.seed, 0x5b1));
  Partition out;
  if (spec.stratify) {
    for (auto label : {corpus::Label::Positive, corpus::Label::Negative}) {
      std::vector<std::size_t> group;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) group.push_back(i);
      }
      split_group(std::move(group), spec, rng, out);
    }
  } else {
    std::vector<std::size_t> all(labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    split_group(std::move(all), spec, rng, out);
  }
  for (auto* part : {&out.train, &out.dev, &out.test}) std::sort(part->begin(), part->end());
  return out;
}

namespace {

LabeledBatch collect(std::span<const EncodedSample> samples, std::span<const std::size_t> members) {
  LabeledBatch lb;
  std::vector<std::vector<std::int32_t>> seqs;
  seqs.reserve(members.size());
  for (auto i : members) {
    seqs.push_back(samples[i].ids);
    lb.targets.push_back(target(samples[i].label));
  }
  lb.batch = nn::Batch::from_sequences(seqs, asmpipe::kPadId);
  lb.members.assign(members.begin(), members.end());
  return lb;
}

std::vector<LabeledBatch> cut(std::span<const EncodedSample> samples, const std::vector<std::size_t>& order,
                              std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  std::vector<LabeledBatch> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    auto end = std::min(order.size(), begin + batch_size);
    batches.push_back(collect(samples, std::span(order).subspan(begin, end - begin)));
  }
  return batches;
}

}  // namespace

std::vector<LabeledBatch> make_batches(std::span<const EncodedSample> samples, std::size_t batch_size,
                                       std::mt19937_64& rng) {
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  return cut(samples, order, batch_size);
}

std::vector<LabeledBatch> sequential_batches(std::span<const EncodedSample> samples, std::size_t batch_size) {
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  return cut(samples, order, batch_size);
}

namespace {

constexpr std::string_view kDatasetFormat = "bofnet-dataset";

template <typename Sample, typename Fill>
void write_dataset(const std::filesystem::path& path, std::string_view partition, std::string_view encoding,
                   std::span<const Sample> samples, Fill fill) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << json{{"format", kDatasetFormat},
              {"version", kDatasetFormatVersion},
              {"partition", partition},
              {"encoding", encoding},
              {"count", samples.size()}}
             .dump()
      << '\n';
  for (const auto& s : samples) {
    json j{{"source_id", s.source_id}, {"label", corpus::to_string(s.label)}};
    fill(j, s);
    out << j.dump() << '\n';
  }
}

template <typename Sample, typename Read>
std::vector<Sample> read_dataset(const std::filesystem::path& path, std::string_view encoding, Read read) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::CorruptFile, path.string() + " is empty");
  std::vector<Sample> out;
  try {
    auto header = json::parse(line);
    if (header.at("format") != kDatasetFormat) throw Error(ErrorCode::CorruptFile, path.string() + " is not a dataset");
    if (header.at("version") != kDatasetFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "dataset version " + header.at("version").dump());
    }
    if (header.at("encoding") != encoding) {
      throw Error(ErrorCode::CorruptFile, path.string() + " holds " + header.at("encoding").get<std::string>() +
                                              ", expected " + std::string(encoding));
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = json::parse(line);
      Sample s;
      s.source_id = j.at("source_id").get<std::string>();
      auto label = corpus::parse_label(j.at("label").get<std::string>());
      if (!label) throw Error(ErrorCode::CorruptFile, "bad label in " + path.string());
      s.label = *label;
      read(j, s);
      out.push_back(std::move(s));
    }
    if (out.size() != header.at("count").get<std::size_t>()) {
      throw Error(ErrorCode::CorruptFile, path.string() + " record count does not match its header");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace

void write_token_dataset(const std::filesystem::path& path, std::string_view partition,
                         std::span<const TokenSample> samples) {
  write_dataset(path, partition, "tokens", samples, [](json& j, const TokenSample& s) { j["tokens"] = s.tokens; });
}

std::vector<TokenSample> read_token_dataset(const std::filesystem::path& path) {
  return read_dataset<TokenSample>(path, "tokens", [](const json& j, TokenSample& s) {
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
  });
}

void write_encoded_dataset(const std::filesystem::path& path, std::string_view partition,
                           std::span<const EncodedSample> samples) {
  write_dataset(path, partition, "ids", samples, [](json& j, const EncodedSample& s) { j["ids"] = s.ids; });
}

std::vector<EncodedSample> read_encoded_dataset(const std::filesystem::path& path) {
  return read_dataset<EncodedSample>(path, "ids", [](const json& j, EncodedSample& s) {
    s.ids = j.at("ids").get<std::vector<asmpipe::TokenId>>();
  });
}

EncodedSample encode(const asmpipe::Vocabulary& vocab, const TokenSample& sample) {
  asmpipe::TokenStream stream{sample.source_id, sample.tokens};
  return {sample.source_id, sample.label, vocab.encode(stream)};
}

std::vector<EncodedSample> encode(const asmpipe::Vocabulary& vocab, std::span<const TokenSample> samples) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(encode(vocab, s));
  return out;
}

asmpipe::Vocabulary build_vocabulary(std::span<const TokenSample> train_samples) {
  std::vector<asmpipe::TokenStream> streams;
  streams.reserve(train_samples.size());
  for (const auto& s : train_samples) streams.push_back({s.source_id, s.tokens});
  return asmpipe::Vocabulary::build(streams);
}

}  // namespace bofnet::train
