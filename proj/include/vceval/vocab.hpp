#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vceval {

using TokenId = std::int32_t;

/// Token <-> id map with four reserved ids ahead of the learned entries.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBlank = 2;
  static constexpr TokenId kSep = 3;
  static constexpr TokenId kReserved = 4;

  Vocabulary();
  /// `tokens` are the non-reserved entries in id order (ids start at kReserved).
  explicit Vocabulary(std::vector<std::string> tokens);

  [[nodiscard]] TokenId id(std::string_view token) const;
  [[nodiscard]] const std::string& token(TokenId id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  [[nodiscard]] std::size_t size() const noexcept { return id_to_token_.size(); }
  [[nodiscard]] std::span<const std::string> learned_tokens() const {
    return std::span(id_to_token_).subspan(kReserved);
  }

  /// Metric tokens of `text` mapped to ids; unknown tokens become kUnk.
  [[nodiscard]] std::vector<TokenId> encode(std::string_view text) const;

  /// Like encode, with each blank marker emitted as kBlank.
  [[nodiscard]] std::vector<TokenId> encode_stem(std::string_view stem) const;

  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

/// Tokens with count >= min_count ordered by (count desc, surface asc). EmptyCorpus when no text.
Vocabulary build_vocab(std::span<const std::string> texts, int min_count);

}  // namespace vceval
