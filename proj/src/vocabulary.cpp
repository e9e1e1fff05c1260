// SPDX-License-Identifier: Apache-2.0
#include "bofnet/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bofnet/error.hpp"

namespace bofnet::asmpipe {

namespace {
constexpr std::string_view kHeaderTag = "bofnet-vocab";
constexpr std::string_view kPadToken = "<PAD>";
constexpr std::string_view kUnkToken = "<UNK>";
}  // namespace

std::string escape_token(const std::string& token) {
  std::string out;
  out.reserve(token.size());
  for (char c : token) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_token(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out += text[i];
      continue;
    }
    if (++i == text.size()) throw Error(ErrorCode::CorruptFile, "dangling escape in vocabulary");
    switch (text[i]) {
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      default: throw Error(ErrorCode::CorruptFile, "unknown escape in vocabulary: \\" + std::string(1, text[i]));
    }
  }
  return out;
}

Vocabulary::Vocabulary() {
  id_to_token_ = {std::string(kPadToken), std::string(kUnkToken)};
  token_to_id_ = {{id_to_token_[0], kPadId}, {id_to_token_[1], kUnkId}};
}

TokenId Vocabulary::add(const std::string& token) {
  auto [it, inserted] = token_to_id_.try_emplace(token, static_cast<TokenId>(id_to_token_.size()));
  if (inserted) id_to_token_.push_back(token);
  return it->second;
}

Vocabulary Vocabulary::build(std::span<const TokenStream> streams) {
  std::vector<std::size_t> order(streams.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return streams[a].source_id < streams[b].source_id;
  });
  Vocabulary vocab;
  for (auto idx : order) {
    for (const auto& token : streams[idx].tokens) vocab.add(token);
  }
  return vocab;
}

std::optional<TokenId> Vocabulary::find(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw Error(ErrorCode::IdOutOfRange, "token id " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(const TokenStream& stream) const {
  std::vector<TokenId> ids;
  ids.reserve(stream.tokens.size());
  for (const auto& token : stream.tokens) ids.push_back(find(token).value_or(kUnkId));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (auto id : ids) tokens.push_back(token(id));
  return tokens;
}

std::string Vocabulary::serialize() const {
  std::ostringstream out;
  out << kHeaderTag << ' ' << kVocabFormatVersion << ' ' << id_to_token_.size() << '\n';
  for (std::size_t id = 0; id < id_to_token_.size(); ++id) {
    out << id << '\t' << escape_token(id_to_token_[id]) << '\n';
  }
  return out.str();
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw Error(ErrorCode::CorruptFile, "empty vocabulary file");
  std::istringstream head(header);
  std::string tag;
  int version = 0;
  std::size_t count = 0;
  if (!(head >> tag >> version >> count) || tag != kHeaderTag) {
    throw Error(ErrorCode::CorruptFile, "bad vocabulary header: " + header);
  }
  if (version != kVocabFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "vocabulary format version " + std::to_string(version));
  }
  if (count < 2) throw Error(ErrorCode::CorruptFile, "vocabulary lacks reserved entries");

  Vocabulary vocab;
  std::string line;
  for (std::size_t expected = 0; expected < count; ++expected) {
    if (!std::getline(in, line)) throw Error(ErrorCode::CorruptFile, "vocabulary truncated");
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorCode::CorruptFile, "malformed vocabulary line: " + line);
    std::size_t id = 0;
    try {
      id = std::stoul(line.substr(0, tab));
    } catch (const std::exception&) {
      throw Error(ErrorCode::CorruptFile, "malformed vocabulary id: " + line);
    }
    if (id != expected) throw Error(ErrorCode::CorruptFile, "vocabulary ids out of order at " + line);
    auto token = unescape_token(line.substr(tab + 1));
    if (id < 2) {
      if (token != vocab.id_to_token_[id]) throw Error(ErrorCode::CorruptFile, "reserved id remapped");
      continue;
    }
    if (vocab.add(token) != static_cast<TokenId>(id)) {
      throw Error(ErrorCode::CorruptFile, "duplicate vocabulary token at id " + std::to_string(id));
    }
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

std::uint64_t Vocabulary::content_hash() const {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace bofnet::asmpipe
