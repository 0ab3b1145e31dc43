#include "dmca/graph_encoder.hpp"

#include <algorithm>

#include "dmca/error.hpp"

namespace dmca {

GraphBatch make_graph_batch(std::span<const chem::MolecularGraph* const> graphs) {
  GraphBatch batch;
  std::vector<double> features;
  batch.graph_offset.push_back(0);
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const chem::MolecularGraph& graph = *graphs[g];
    if (graph.atoms.empty()) throw DataError("graph encoder: molecule without atoms");
    const std::size_t base = batch.graph_offset.back();
    for (const auto& atom : graph.atoms) {
      const auto v = atom.to_vector();
      features.insert(features.end(), v.begin(), v.end());
      batch.node_graph.push_back(g);
    }
    const auto adjacency = graph.adjacency();
    for (std::size_t i = 0; i < graph.atoms.size(); ++i) {
      // Self-loop merged into the sorted neighbor list so edges stay ordered by source.
      std::vector<std::size_t> sources = adjacency[i];
      sources.insert(std::upper_bound(sources.begin(), sources.end(), i), i);
      for (std::size_t j : sources) {
        batch.edge_src.push_back(base + j);
        batch.edge_dst.push_back(base + i);
      }
    }
    batch.graph_offset.push_back(base + graph.atoms.size());
  }
  const std::size_t n = batch.node_graph.size();
  batch.features = Tensor({n, chem::kAtomFeatureCount}, std::move(features));
  return batch;
}

GraphBatch make_graph_batch(const chem::MolecularGraph& graph) {
  const chem::MolecularGraph* one = &graph;
  return make_graph_batch(std::span<const chem::MolecularGraph* const>(&one, 1));
}

GraphEncoder::GraphEncoder(const GraphEncoderConfig& config, ParamStore& params, CounterRng& init_rng,
                           const std::string& prefix)
    : config_(config) {
  if (config.layers == 0 || config.width == 0) throw ConfigError("graph encoder needs at least one layer and width");
  std::size_t in = config.in_features;
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string name = prefix + "." + std::to_string(l);
    GatLayer layer;
    layer.W = params.add_uniform(name + ".W", {in, config.width}, in, init_rng);
    layer.Wa = params.add_uniform(name + ".Wa", {2 * config.width, 1}, 2 * config.width, init_rng);
    layer.norm = {params.add_constant(name + ".gain", {config.width}, 1.0),
                  params.add_constant(name + ".bias", {config.width}, 0.0)};
    layers_.push_back(layer);
    in = config.width;
  }
}

GraphEncoder::Attention GraphEncoder::attention(const GatLayer& layer, const Tensor& projected,
                                                const GraphBatch& batch) const {
  const std::size_t width = projected.cols();
  const Tensor self_score = matmul(projected, slice_rows(layer.Wa, 0, width));              // a1 . W h_i
  const Tensor neighbor_score = matmul(projected, slice_rows(layer.Wa, width, 2 * width));  // a2 . W h_j
  const Tensor e = leaky_relu(add(gather_rows(self_score, batch.edge_dst), gather_rows(neighbor_score, batch.edge_src)),
                              config_.leaky_slope);
  return {e, segment_softmax(e, batch.edge_dst, batch.num_nodes())};
}

Tensor GraphEncoder::layer_forward(const GatLayer& layer, const Tensor& h, const GraphBatch& batch, Mode mode,
                                   CounterRng& rng) const {
  const Tensor projected = matmul(h, layer.W);
  const Attention att = attention(layer, projected, batch);
  const Tensor messages = mul_rows(gather_rows(projected, batch.edge_src), att.weights);
  const Tensor aggregated = segment_sum(messages, batch.edge_dst, batch.num_nodes());
  return dropout(layer.norm(activate(aggregated, config_.activation)), config_.dropout, mode, rng);
}

GraphEncoderOutput GraphEncoder::forward(const GraphBatch& batch, Mode mode, CounterRng& rng) const {
  if (batch.num_nodes() == 0) throw DataError("graph encoder: empty graph batch");
  if (batch.features.cols() != config_.in_features) {
    throw ShapeError("graph encoder: expected " + std::to_string(config_.in_features) + " input features");
  }
  Tensor h = batch.features;
  for (const GatLayer& layer : layers_) h = layer_forward(layer, h, batch, mode, rng);
  const std::size_t g = batch.num_graphs();
  const Tensor pooled_parts[] = {segment_mean(h, batch.node_graph, g), segment_max(h, batch.node_graph, g)};
  return {h, concat_cols(pooled_parts)};
}

}  // namespace dmca
