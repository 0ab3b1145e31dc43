#include "dmca/fusion.hpp"

#include <cmath>

#include "dmca/error.hpp"

namespace dmca {

GraphFeatures parse_graph_features(const std::string& name) {
  if (name == "nodes") return GraphFeatures::Nodes;
  if (name == "pooled") return GraphFeatures::Pooled;
  throw ConfigError("unknown graph feature mode '" + name + "' (expected nodes or pooled)");
}

std::string to_string(GraphFeatures fg) { return fg == GraphFeatures::Nodes ? "nodes" : "pooled"; }

FusionEncoder::FusionEncoder(const FusionConfig& config, ParamStore& params, CounterRng& init_rng,
                             const std::string& prefix)
    : config_(config) {
  if (config.heads == 0 || config.width % config.heads != 0) {
    throw ConfigError("fusion width " + std::to_string(config.width) + " is not divisible by " +
                      std::to_string(config.heads) + " heads");
  }
  const std::size_t dh = config.width / config.heads;
  refine_attention_ = SelfAttention::create(params, prefix + ".refine", config.width, config.refine_heads, init_rng);
  refine_norm_ = LayerNorm::create(params, prefix + ".refine.ln", config.width);
  for (std::size_t h = 0; h < config.heads; ++h) {
    const std::string name = prefix + ".head" + std::to_string(h);
    CrossHead head;
    head.wq = params.add_uniform(name + ".wq", {config.width, dh}, config.width, init_rng);
    head.wk = params.add_uniform(name + ".wk", {config.graph_width, dh}, config.graph_width, init_rng);
    head.wv = params.add_uniform(name + ".wv", {config.graph_width, dh}, config.graph_width, init_rng);
    heads_.push_back(head);
  }
  wo_ = params.add_uniform(prefix + ".wo", {config.width, config.width}, config.width, init_rng);
  ln1_ = LayerNorm::create(params, prefix + ".ln1", config.width);
  ffn_ = FeedForward::create(params, prefix + ".ffn", config.width, config.ffn_width, config.activation, init_rng);
  ln2_ = LayerNorm::create(params, prefix + ".ln2", config.width);
}

Tensor FusionEncoder::refine(const SequenceFeatures& seq, Mode mode, CounterRng& rng) const {
  return refine_norm_(add(seq.features, dropout(refine_attention_(seq.features, seq.mask), config_.dropout, mode, rng)));
}

Tensor FusionEncoder::cross_head(std::size_t h, const Tensor& fs, const Tensor& fg, Tensor* weights) const {
  const CrossHead& head = heads_.at(h);
  const Tensor q = matmul(fs, head.wq);
  const Tensor k = matmul(fg, head.wk);
  const Tensor v = matmul(fg, head.wv);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head.wq.cols()));
  const Tensor p = softmax(scale(matmul(q, transpose(k)), inv_sqrt), 1);
  if (weights) *weights = p;
  return matmul(p, v);
}

Tensor FusionEncoder::multi_head_cross(const Tensor& fs, const Tensor& fg, FusionTrace* trace) const {
  if (fs.cols() != config_.width) throw ShapeError("fusion: query width differs from the configured width");
  if (fg.cols() != config_.graph_width) throw ShapeError("fusion: graph feature width differs from configuration");
  if (fg.rows() == 0) throw ShapeError("fusion: graph features have no rows");
  std::vector<Tensor> outputs;
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    Tensor weights;
    outputs.push_back(cross_head(h, fs, fg, trace ? &weights : nullptr));
    if (trace) {
      trace->cross_weights.push_back(weights);
      trace->head_outputs.push_back(outputs.back());
    }
  }
  Tensor cross = matmul(outputs.size() == 1 ? outputs.front() : concat_cols(outputs), wo_);
  if (trace) trace->cross = cross;
  return cross;
}

JointRepresentation FusionEncoder::forward(const SequenceFeatures& seq, const Tensor& fg, Mode mode, CounterRng& rng,
                                           FusionTrace* trace) const {
  const Tensor fs = refine(seq, mode, rng);
  if (trace) trace->refined = fs;
  const Tensor cross = multi_head_cross(fs, fg, trace);
  const Tensor fgs = ln1_(add(fs, dropout(cross, config_.dropout, mode, rng)));
  JointRepresentation joint;
  joint.features = ln2_(add(fgs, dropout(ffn_(fgs), config_.dropout, mode, rng)));
  joint.pooled = masked_mean_rows(joint.features, seq.mask);
  return joint;
}

}  // namespace dmca
