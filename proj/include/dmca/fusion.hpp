#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dmca/layers.hpp"
#include "dmca/seq_encoder.hpp"

namespace dmca {

/// Which graph-branch output serves as cross-attention keys/values.
enum class GraphFeatures { Nodes, Pooled };

GraphFeatures parse_graph_features(const std::string& name);
std::string to_string(GraphFeatures fg);

struct FusionConfig {
  std::size_t width = 64;        // must equal the sequence width (residual with F_s)
  std::size_t graph_width = 64;  // width of one F_g row (F' for nodes, 2F' for pooled)
  std::size_t heads = 4;
  std::size_t ffn_width = 128;
  std::size_t refine_heads = 4;
  double dropout = 0.1;
  Activation activation = Activation::Gelu;
};

struct CrossHead {
  Tensor wq;  // [d_s x d_h]
  Tensor wk;  // [d_g x d_h]
  Tensor wv;  // [d_g x d_h]
};

struct JointRepresentation {
  Tensor features;  // [L x d] F_GS after the feed-forward block
  Tensor pooled;    // [1 x d] masked mean over query rows
};

/// Intermediate tensors of one fusion pass, for inspection in tests.
struct FusionTrace {
  Tensor refined;                         // F_s
  std::vector<Tensor> cross_weights;      // per head [L x N]
  std::vector<Tensor> head_outputs;       // per head [L x d_h]
  Tensor cross;                           // Concat(heads) W^o
};

/// Refines F'_s by self-attention (residual + LN) into F_s, then cross-attends with
/// queries from F_s and keys/values from F_g, head i = softmax(Q_i K_i^T / sqrt(d_h)) V_i,
/// projects the concatenated heads with W^o, and applies residual + LN and FFN + residual + LN.
class FusionEncoder {
 public:
  FusionEncoder(const FusionConfig& config, ParamStore& params, CounterRng& init_rng,
                const std::string& prefix = "fusion");

  Tensor refine(const SequenceFeatures& seq, Mode mode, CounterRng& rng) const;
  Tensor cross_head(std::size_t head, const Tensor& fs, const Tensor& fg, Tensor* weights = nullptr) const;
  Tensor multi_head_cross(const Tensor& fs, const Tensor& fg, FusionTrace* trace = nullptr) const;

  JointRepresentation forward(const SequenceFeatures& seq, const Tensor& fg, Mode mode, CounterRng& rng,
                              FusionTrace* trace = nullptr) const;

  const FusionConfig& config() const noexcept { return config_; }
  const std::vector<CrossHead>& heads() const noexcept { return heads_; }

 private:
  FusionConfig config_;
  SelfAttention refine_attention_;
  LayerNorm refine_norm_;
  std::vector<CrossHead> heads_;
  Tensor wo_;
  LayerNorm ln1_;
  FeedForward ffn_;
  LayerNorm ln2_;
};

}  // namespace dmca
