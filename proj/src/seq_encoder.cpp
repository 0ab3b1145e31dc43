#include "dmca/seq_encoder.hpp"

#include <numeric>

#include "dmca/error.hpp"

namespace dmca {

SeqEncoder::SeqEncoder(const SeqEncoderConfig& config, ParamStore& params, CounterRng& init_rng,
                       const std::string& prefix)
    : config_(config) {
  if (config.vocab_size <= kReservedTokens) throw ConfigError("sequence encoder vocab must exceed the reserved ids");
  if (config.max_positions < 2) throw ConfigError("sequence encoder needs max_positions >= 2");
  token_embedding_ = params.add_uniform(prefix + ".embed", {config.vocab_size, config.width}, 1, init_rng);
  position_embedding_ = params.add_uniform(prefix + ".pos", {config.max_positions, config.width}, 1, init_rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string name = prefix + ".layer" + std::to_string(l);
    EncoderLayer layer;
    layer.attention = SelfAttention::create(params, name, config.width, config.heads, init_rng);
    layer.ln1 = LayerNorm::create(params, name + ".ln1", config.width);
    layer.ffn = FeedForward::create(params, name, config.width, config.ffn_width, config.activation, init_rng);
    layer.ln2 = LayerNorm::create(params, name + ".ln2", config.width);
    layers_.push_back(layer);
  }
}

Tensor SeqEncoder::embed(const TokenSequence& tokens, std::size_t length) const {
  if (length > config_.max_positions) {
    throw DataError("sequence of length " + std::to_string(length) + " exceeds max_positions " +
                    std::to_string(config_.max_positions));
  }
  std::vector<std::size_t> ids(tokens.ids.begin(), tokens.ids.begin() + static_cast<std::ptrdiff_t>(length));
  for (std::size_t id : ids) {
    if (id >= config_.vocab_size) throw DataError("token id " + std::to_string(id) + " outside the vocabulary");
  }
  std::vector<std::size_t> positions(length);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  return add(gather_rows(token_embedding_, ids), gather_rows(position_embedding_, positions));
}

SequenceFeatures SeqEncoder::forward(const TokenSequence& tokens, Mode mode, CounterRng& rng, bool trim,
                                     std::vector<Tensor>* attention_weights) const {
  const std::size_t length = trim ? tokens.content_length() : tokens.length();
  if (length == 0) throw DataError("cannot encode an empty token sequence");
  if (tokens.attention_mask.size() != tokens.ids.size()) throw DataError("token ids and mask differ in length");
  SequenceFeatures out;
  out.mask.assign(tokens.attention_mask.begin(), tokens.attention_mask.begin() + static_cast<std::ptrdiff_t>(length));
  Tensor x = embed(tokens, length);
  for (const EncoderLayer& layer : layers_) {
    x = layer.ln1(add(x, dropout(layer.attention(x, out.mask, attention_weights), config_.dropout, mode, rng)));
    x = layer.ln2(add(x, dropout(layer.ffn(x), config_.dropout, mode, rng)));
  }
  out.features = x;
  return out;
}

}  // namespace dmca
