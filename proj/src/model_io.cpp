// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <boost/crc.hpp>

#include "bofnet/error.hpp"
#include "bofnet/model.hpp"

static_assert(std::endian::native == std::endian::little, "model files are written little-endian");

namespace bofnet::nn {

namespace {

constexpr std::array<char, 8> kMagic = {'B', 'O', 'F', 'N', 'E', 'T', 'M', 'D'};

template <typename T>
void put(std::string& out, T value) {
  char raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  out.append(raw, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw Error(ErrorCode::CorruptFile, "model file is truncated");
    T value;
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::size_t position() const { return pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::string_view bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelParams& params, std::uint64_t vocab_hash) {
  const auto& cfg = params.config();
  std::string out(kMagic.begin(), kMagic.end());
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint64_t>(out, cfg.vocab_size);
  put<std::uint64_t>(out, cfg.embed_dim);
  put<std::uint64_t>(out, cfg.hidden_dim);
  put<std::uint64_t>(out, cfg.num_layers);
  put<double>(out, cfg.dropout_rate);
  put<double>(out, cfg.forget_bias);
  put<double>(out, cfg.input_bias);
  put<std::uint64_t>(out, cfg.seed);
  put<std::uint64_t>(out, vocab_hash);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(params.flat().size()));
  out.append(reinterpret_cast<const char*>(params.flat().data()),
             static_cast<std::size_t>(params.flat().size()) * sizeof(double));
  put<std::uint32_t>(out, crc32(out));

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::Io, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path, std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  const std::string data = buffer.str();

  if (data.size() < kMagic.size() + 4 || !std::equal(kMagic.begin(), kMagic.end(), data.begin())) {
    throw Error(ErrorCode::CorruptFile, path.string() + " is not a model file");
  }
  Reader r(std::string_view(data).substr(kMagic.size()));
  auto version = r.get<std::uint32_t>();
  if (version != static_cast<std::uint32_t>(kModelFormatVersion)) {
    throw Error(ErrorCode::VersionMismatch,
                "model format version " + std::to_string(version) + ", expected " + std::to_string(kModelFormatVersion));
  }
  if (data.size() < 4) throw Error(ErrorCode::CorruptFile, "model file is truncated");
  const std::string_view body(data.data(), data.size() - 4);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, data.data() + body.size(), 4);
  if (crc32(body) != stored_crc) throw Error(ErrorCode::CorruptFile, "model checksum mismatch in " + path.string());

  ModelConfig cfg;
  cfg.vocab_size = r.get<std::uint64_t>();
  cfg.embed_dim = r.get<std::uint64_t>();
  cfg.hidden_dim = r.get<std::uint64_t>();
  cfg.num_layers = r.get<std::uint64_t>();
  cfg.dropout_rate = r.get<double>();
  cfg.forget_bias = r.get<double>();
  cfg.input_bias = r.get<double>();
  cfg.seed = r.get<std::uint64_t>();
  auto vocab_hash = r.get<std::uint64_t>();
  auto count = r.get<std::uint64_t>();
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::CorruptFile, std::string("bad model header: ") + e.what());
  }
  if (expected_vocab_hash && *expected_vocab_hash != vocab_hash) {
    throw Error(ErrorCode::VocabMismatch, "model was trained with a different vocabulary");
  }

  ModelParams params(cfg);
  if (count != static_cast<std::uint64_t>(params.flat().size()) ||
      kMagic.size() + r.position() + count * sizeof(double) != body.size()) {
    throw Error(ErrorCode::CorruptFile, "parameter count does not match the model header");
  }
  std::memcpy(params.flat().data(), data.data() + kMagic.size() + r.position(), count * sizeof(double));
  return {std::move(params), vocab_hash};
}

}  // namespace bofnet::nn
