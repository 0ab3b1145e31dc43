#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dmca/layers.hpp"
#include "dmca/tokenizer.hpp"

namespace dmca {

struct SeqEncoderConfig {
  std::size_t vocab_size = kDefaultVocabSize;
  std::size_t width = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn_width = 128;
  double dropout = 0.1;
  std::size_t max_positions = kDefaultMaxLength;
  Activation activation = Activation::Gelu;
};

/// Per-token features and the key mask they were computed under.
struct SequenceFeatures {
  Tensor features;  // [L x d]
  std::vector<std::uint8_t> mask;
};

struct EncoderLayer {
  SelfAttention attention;
  LayerNorm ln1;
  FeedForward ffn;
  LayerNorm ln2;
};

/// Post-norm Transformer encoder over learned token + position embeddings:
///   x <- LN1(x + Dropout(MHA(x))),  x <- LN2(x + Dropout(FFN(x))).
class SeqEncoder {
 public:
  SeqEncoder(const SeqEncoderConfig& config, ParamStore& params, CounterRng& init_rng,
             const std::string& prefix = "seq");

  /// Token + positional embedding of ids[0, length).
  Tensor embed(const TokenSequence& tokens, std::size_t length) const;

  /// With `trim` only the non-PAD prefix is encoded (padding cannot influence it);
  /// otherwise every position is encoded and PAD keys are masked out of attention.
  SequenceFeatures forward(const TokenSequence& tokens, Mode mode, CounterRng& rng, bool trim = true,
                           std::vector<Tensor>* attention_weights = nullptr) const;

  const SeqEncoderConfig& config() const noexcept { return config_; }

 private:
  SeqEncoderConfig config_;
  Tensor token_embedding_;
  Tensor position_embedding_;
  std::vector<EncoderLayer> layers_;
};

}  // namespace dmca
