#include "dmca/layers.hpp"

#include <cmath>

#include "dmca/error.hpp"

namespace dmca {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "elu") return Activation::Elu;
  if (name == "gelu") return Activation::Gelu;
  throw ConfigError("unknown activation '" + name + "' (expected relu, elu or gelu)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu:
      return "relu";
    case Activation::Elu:
      return "elu";
    case Activation::Gelu:
      return "gelu";
  }
  return "?";
}

Tensor activate(const Tensor& x, Activation a) {
  switch (a) {
    case Activation::Relu:
      return relu(x);
    case Activation::Elu:
      return elu(x);
    case Activation::Gelu:
      return gelu(x);
  }
  return x;
}

Linear Linear::create(ParamStore& params, const std::string& name, std::size_t in, std::size_t out, CounterRng& rng,
                      bool with_bias) {
  Linear l;
  l.weight = params.add_uniform(name + ".w", {in, out}, in, rng);
  if (with_bias) l.bias = params.add_constant(name + ".b", {out}, 0.0);
  return l;
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = matmul(x, weight);
  return bias.defined() ? add_bias(y, bias) : y;
}

LayerNorm LayerNorm::create(ParamStore& params, const std::string& name, std::size_t width) {
  return {params.add_constant(name + ".gain", {width}, 1.0), params.add_constant(name + ".bias", {width}, 0.0)};
}

SelfAttention SelfAttention::create(ParamStore& params, const std::string& name, std::size_t width,
                                    std::size_t heads, CounterRng& rng) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  SelfAttention a;
  a.wq = Linear::create(params, name + ".wq", width, width, rng);
  a.wk = Linear::create(params, name + ".wk", width, width, rng);
  a.wv = Linear::create(params, name + ".wv", width, width, rng);
  a.wo = Linear::create(params, name + ".wo", width, width, rng);
  a.heads = heads;
  return a;
}

Tensor SelfAttention::operator()(const Tensor& x, std::span<const std::uint8_t> key_mask,
                                 std::vector<Tensor>* weights) const {
  if (key_mask.size() != x.rows()) throw ShapeError("attention mask length differs from sequence length");
  const std::size_t width = x.cols();
  const std::size_t dk = width / heads;
  const Tensor q = wq(x);
  const Tensor k = wk(x);
  const Tensor v = wv(x);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<Tensor> outputs;
  outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = slice_cols(q, h * dk, (h + 1) * dk);
    const Tensor kh = slice_cols(k, h * dk, (h + 1) * dk);
    const Tensor vh = slice_cols(v, h * dk, (h + 1) * dk);
    const Tensor p = masked_softmax(scale(matmul(qh, transpose(kh)), inv_sqrt), key_mask);
    if (weights) weights->push_back(p);
    outputs.push_back(matmul(p, vh));
  }
  return wo(heads == 1 ? outputs.front() : concat_cols(outputs));
}

FeedForward FeedForward::create(ParamStore& params, const std::string& name, std::size_t width, std::size_t hidden,
                                Activation activation, CounterRng& rng) {
  FeedForward f;
  f.first = Linear::create(params, name + ".ffn1", width, hidden, rng);
  f.second = Linear::create(params, name + ".ffn2", hidden, width, rng);
  f.activation = activation;
  return f;
}

Tensor masked_mean_rows(const Tensor& x, std::span<const std::uint8_t> mask) {
  if (mask.size() != x.rows()) throw ShapeError("masked_mean_rows: mask length differs from rows");
  std::size_t count = 0;
  for (auto m : mask) count += m != 0 ? 1 : 0;
  if (count == 0) throw ShapeError("masked_mean_rows: every row is masked");
  std::vector<double> w(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) w[i] = mask[i] != 0 ? 1.0 / static_cast<double>(count) : 0.0;
  return matmul(Tensor({1, mask.size()}, std::move(w)), x);
}

}  // namespace dmca
