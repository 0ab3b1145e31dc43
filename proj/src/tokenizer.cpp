#include "dmca/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "dmca/error.hpp"

namespace dmca {
namespace {

constexpr const char* kReserved[kReservedTokens] = {"<pad>", "<unk>", "<bos>", "<eos>"};

std::size_t utf8_length(unsigned char lead) {
  if (lead >= 0xF0) return 4;
  if (lead >= 0xE0) return 3;
  if (lead >= 0xC0) return 2;
  return 1;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = 1;
    const char c = s[i];
    if (c == '[') {
      const std::size_t close = s.find(']', i + 1);
      if (close != std::string_view::npos) len = close - i + 1;
    } else if ((c == 'C' || c == 'B') && i + 1 < s.size() && s[i + 1] == (c == 'C' ? 'l' : 'r')) {
      len = 2;
    } else if (c == '%' && i + 2 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isdigit(static_cast<unsigned char>(s[i + 2]))) {
      len = 3;
    } else {
      len = std::min(utf8_length(static_cast<unsigned char>(c)), s.size() - i);
    }
    tokens.emplace_back(s.substr(i, len));
    i += len;
  }
  return tokens;
}

Vocab::Vocab() {
  for (const char* t : kReserved) push(t);
}

void Vocab::push(const std::string& token) {
  index_.emplace(token, tokens_.size());
  tokens_.push_back(token);
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& corpus, std::size_t max_size) {
  if (max_size < kReservedTokens + 1) throw ParameterError("vocab max_size must be at least 5");
  if (corpus.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& tokens : corpus)
    for (const auto& t : tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab vocab;
  for (const auto& [token, count] : ranked) {
    if (vocab.size() >= max_size) break;
    if (!vocab.contains(token)) vocab.push(token);
  }
  return vocab;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary: " + path.string());
  Vocab vocab;
  std::string line;
  for (std::size_t r = 0; r < kReservedTokens; ++r) {
    if (!std::getline(in, line) || line != kReserved[r]) {
      throw DataError("vocabulary header must list " + std::string(kReserved[r]) + " on line " + std::to_string(r + 1));
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) throw DataError("empty token line in vocabulary " + path.string());
    if (vocab.contains(line)) throw DataError("duplicate token '" + line + "' in vocabulary");
    vocab.push(line);
  }
  if (vocab.size() > kDefaultVocabSize) throw DataError("vocabulary exceeds 767 entries");
  return vocab;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write vocabulary: " + path.string());
  for (const auto& t : tokens_) out << t << "\n";
}

std::size_t Vocab::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(std::size_t id) const {
  if (id >= tokens_.size()) throw DataError("token id " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::size_t TokenSequence::content_length() const {
  return static_cast<std::size_t>(std::count(attention_mask.begin(), attention_mask.end(), std::uint8_t{1}));
}

TokenSequence encode_unpadded(const std::vector<std::string>& tokens, const Vocab& vocab, std::size_t max_length) {
  if (max_length < 2) throw ParameterError("max_length must leave room for BOS and EOS");
  TokenSequence seq;
  seq.original_length = tokens.size();
  const std::size_t kept = std::min(tokens.size(), max_length - 2);
  seq.ids.reserve(kept + 2);
  seq.ids.push_back(kBosId);
  for (std::size_t i = 0; i < kept; ++i) seq.ids.push_back(vocab.id(tokens[i]));
  seq.ids.push_back(kEosId);
  seq.attention_mask.assign(seq.ids.size(), 1);
  return seq;
}

TokenSequence encode(const std::vector<std::string>& tokens, const Vocab& vocab, std::size_t max_length) {
  TokenSequence seq = encode_unpadded(tokens, vocab, max_length);
  seq.ids.resize(max_length, kPadId);
  seq.attention_mask.resize(max_length, 0);
  return seq;
}

}  // namespace dmca
