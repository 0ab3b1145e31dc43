#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dmca/chem/molecule.hpp"
#include "dmca/layers.hpp"

namespace dmca {

/// Several molecular graphs composed block-diagonally. Every node gets a self-loop and
/// edges never cross molecule boundaries.
struct GraphBatch {
  Tensor features;                    // [N x 9] node feature vectors
  std::vector<std::size_t> edge_src;  // message source j of directed edge j -> i
  std::vector<std::size_t> edge_dst;  // receiving node i; edges sorted by (dst, src)
  std::vector<std::size_t> node_graph;
  std::vector<std::size_t> graph_offset;  // first node of each graph, plus a final N
  std::size_t num_graphs() const noexcept { return graph_offset.empty() ? 0 : graph_offset.size() - 1; }
  std::size_t num_nodes() const noexcept { return node_graph.size(); }
};

GraphBatch make_graph_batch(std::span<const chem::MolecularGraph* const> graphs);
GraphBatch make_graph_batch(const chem::MolecularGraph& graph);

struct GraphEncoderConfig {
  std::size_t in_features = chem::kAtomFeatureCount;
  std::size_t width = 64;
  std::size_t layers = 4;
  double dropout = 0.1;
  double leaky_slope = 0.2;
  Activation activation = Activation::Elu;
};

struct GatLayer {
  Tensor W;   // [F x F']
  Tensor Wa;  // [2F' x 1]: first half scores the receiving node, second half the neighbor
  LayerNorm norm;
};

struct GraphEncoderOutput {
  Tensor node_features;  // [N x F'] after the last layer
  Tensor pooled;         // [G x 2F'] per-graph mean || max of node_features
};

/// Stack of single-head GAT layers:
///   e_ij = LeakyReLU(Wa^T [W h_i || W h_j]),  alpha_ij = softmax over j in N(i) of e_ij,
///   h'_i = Dropout(LN(act(sum_j alpha_ij W h_j))).
class GraphEncoder {
 public:
  GraphEncoder(const GraphEncoderConfig& config, ParamStore& params, CounterRng& init_rng,
               const std::string& prefix = "gat");

  GraphEncoderOutput forward(const GraphBatch& batch, Mode mode, CounterRng& rng) const;

  /// Raw attention scores e and normalized weights alpha of one layer, one per directed edge.
  struct Attention {
    Tensor scores;
    Tensor weights;
  };
  Attention attention(const GatLayer& layer, const Tensor& projected, const GraphBatch& batch) const;
  Tensor layer_forward(const GatLayer& layer, const Tensor& h, const GraphBatch& batch, Mode mode,
                       CounterRng& rng) const;

  const GraphEncoderConfig& config() const noexcept { return config_; }
  const std::vector<GatLayer>& layers() const noexcept { return layers_; }

 private:
  GraphEncoderConfig config_;
  std::vector<GatLayer> layers_;
};

}  // namespace dmca
