#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dmca/ops.hpp"
#include "dmca/params.hpp"
#include "dmca/rng.hpp"

namespace dmca {

enum class Activation { Relu, Elu, Gelu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);
Tensor activate(const Tensor& x, Activation a);

/// x W + b, with W stored [in x out] under `<name>.w` and b under `<name>.b`.
struct Linear {
  Tensor weight;
  Tensor bias;  // undefined when the layer has no bias

  static Linear create(ParamStore& params, const std::string& name, std::size_t in, std::size_t out,
                       CounterRng& rng, bool with_bias = true);
  Tensor operator()(const Tensor& x) const;
};

/// Gain (ones) and bias (zeros) over the last axis, under `<name>.gain` / `<name>.bias`.
struct LayerNorm {
  Tensor gain;
  Tensor bias;

  static LayerNorm create(ParamStore& params, const std::string& name, std::size_t width);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gain, bias); }
};

/// Multi-head scaled dot-product self-attention with fused Q/K/V/O projections
/// (`<name>.wq`, `.wk`, `.wv`, `.wo`). Head h uses columns [h*dk, (h+1)*dk), scale 1/sqrt(dk).
struct SelfAttention {
  Linear wq, wk, wv, wo;
  std::size_t heads = 1;

  static SelfAttention create(ParamStore& params, const std::string& name, std::size_t width, std::size_t heads,
                              CounterRng& rng);
  /// `key_mask` has one entry per row of x (1 = attend); masked keys get weight exactly 0.
  /// When `weights` is non-null it receives each head's [L x L] attention matrix.
  Tensor operator()(const Tensor& x, std::span<const std::uint8_t> key_mask,
                    std::vector<Tensor>* weights = nullptr) const;
};

/// Position-wise two-layer feed-forward block (`<name>.ffn1`, `<name>.ffn2`).
struct FeedForward {
  Linear first, second;
  Activation activation = Activation::Gelu;

  static FeedForward create(ParamStore& params, const std::string& name, std::size_t width, std::size_t hidden,
                            Activation activation, CounterRng& rng);
  Tensor operator()(const Tensor& x) const { return second(activate(first(x), activation)); }
};

/// Mean over the rows of x whose mask entry is 1, as a [1 x cols] row.
Tensor masked_mean_rows(const Tensor& x, std::span<const std::uint8_t> mask);

}  // namespace dmca
