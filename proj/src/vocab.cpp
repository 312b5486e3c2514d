#include "vceval/vocab.hpp"

#include <algorithm>
#include <map>

#include "vceval/error.hpp"
#include "vceval/questgen.hpp"
#include "vceval/textmetrics.hpp"

namespace vceval {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  id_to_token_ = {"<pad>", "<unk>", "<blank>", "<sep>"};
  id_to_token_.insert(id_to_token_.end(), std::make_move_iterator(tokens.begin()),
                      std::make_move_iterator(tokens.end()));
  for (std::size_t i = kReserved; i < id_to_token_.size(); ++i) {
    const auto [it, inserted] = token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i));
    if (!inserted) throw Error(ErrorCode::InvariantViolation, "duplicate vocabulary token '" + it->first + "'");
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  for (const auto& t : metric_tokenize(text).tokens) out.push_back(id(t));
  return out;
}

std::vector<TokenId> Vocabulary::encode_stem(std::string_view stem) const {
  std::vector<TokenId> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = stem.find(kBlankMarker, start);
    const auto part = encode(stem.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    out.insert(out.end(), part.begin(), part.end());
    if (pos == std::string_view::npos) break;
    out.push_back(kBlank);
    start = pos + kBlankMarker.size();
  }
  return out;
}

Vocabulary build_vocab(std::span<const std::string> texts, int min_count) {
  std::map<std::string, long long> counts;
  for (const auto& t : texts) {
    for (auto& tok : metric_tokenize(t).tokens) ++counts[tok];
  }
  if (counts.empty()) throw Error(ErrorCode::EmptyCorpus, "no tokens to build a vocabulary from");
  std::vector<std::pair<std::string, long long>> kept;
  for (auto& [tok, c] : counts) {
    if (c >= min_count) kept.emplace_back(tok, c);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (auto& [tok, c] : kept) tokens.push_back(tok);
  return Vocabulary(std::move(tokens));
}

}  // namespace vceval
