#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dmca {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;
inline constexpr std::size_t kBosId = 2;
inline constexpr std::size_t kEosId = 3;
inline constexpr std::size_t kReservedTokens = 4;
inline constexpr std::size_t kDefaultVocabSize = 767;
inline constexpr std::size_t kDefaultMaxLength = 512;

/// Splits a SMILES string into atom-level tokens: bracket atoms, Cl, Br and %nn are single
/// tokens, everything else is one character (a UTF-8 sequence counts as one character).
/// Concatenating the tokens gives back the input.
std::vector<std::string> tokenize(std::string_view smiles);

/// Token <-> id map. Ids 0-3 are <pad>, <unk>, <bos>, <eos>.
class Vocab {
 public:
  Vocab();

  /// Keeps the most frequent tokens (ties: lexicographically smaller first) up to max_size
  /// entries including the four reserved ones.
  static Vocab build(const std::vector<std::vector<std::string>>& corpus, std::size_t max_size = kDefaultVocabSize);

  /// Text format: the four reserved tokens on header lines, then one token per line in id order.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const noexcept { return tokens_.size(); }
  /// Id of `token`, or kUnkId.
  std::size_t id(const std::string& token) const;
  const std::string& token(std::size_t id) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  void push(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TokenSequence {
  std::vector<std::size_t> ids;
  std::vector<std::uint8_t> attention_mask;
  /// Number of tokens produced by `tokenize`, before BOS/EOS and truncation.
  std::size_t original_length = 0;

  std::size_t length() const noexcept { return ids.size(); }
  /// Count of non-PAD positions (BOS, content, EOS).
  std::size_t content_length() const;
};

/// BOS + ids + EOS, truncated to max_length with EOS kept as the last content token, then
/// PAD-filled to exactly max_length.
TokenSequence encode(const std::vector<std::string>& tokens, const Vocab& vocab,
                     std::size_t max_length = kDefaultMaxLength);

/// Same ids and mask without PAD filling (length = content_length()).
TokenSequence encode_unpadded(const std::vector<std::string>& tokens, const Vocab& vocab,
                              std::size_t max_length = kDefaultMaxLength);

}  // namespace dmca
