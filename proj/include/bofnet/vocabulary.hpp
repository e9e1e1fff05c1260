// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bofnet/asm_pipeline.hpp"

namespace bofnet::asmpipe {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr int kVocabFormatVersion = 1;

/// Token <-> id table. Ids 0 and 1 are reserved for padding and unknown
/// tokens; corpus tokens get ids from 2 upwards in first-occurrence order.
class Vocabulary {
 public:
  Vocabulary();

  /// Streams are visited in lexicographic source_id order, whatever the input order.
  static Vocabulary build(std::span<const TokenStream> streams);

  std::size_t size() const { return id_to_token_.size(); }
  std::optional<TokenId> find(const std::string& token) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(const TokenStream& stream) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  /// 64-bit FNV-1a over the serialized table; stored in model files.
  std::uint64_t content_hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  std::string serialize() const;
  static Vocabulary deserialize(const std::string& text);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.id_to_token_ == b.id_to_token_;
  }

 private:
  TokenId add(const std::string& token);

  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

std::string escape_token(const std::string& token);
std::string unescape_token(const std::string& text);

}  // namespace bofnet::asmpipe
