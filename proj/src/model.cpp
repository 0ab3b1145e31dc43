#include "dmca/model.hpp"

#include <vector>

#include "dmca/error.hpp"

namespace dmca {

Arm parse_arm(const std::string& name) {
  if (name == "gat") return Arm::Gat;
  if (name == "seq") return Arm::Seq;
  if (name == "dmca") return Arm::Dmca;
  throw ConfigError("unknown arm '" + name + "' (expected gat, seq or dmca)");
}

std::string to_string(Arm arm) {
  switch (arm) {
    case Arm::Gat:
      return "gat";
    case Arm::Seq:
      return "seq";
    case Arm::Dmca:
      return "dmca";
  }
  return "?";
}

Model::Model(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
  if (config.outputs == 0) throw ConfigError("model needs at least one output");
  // Separate streams keep each branch's initialization independent of which others exist.
  CounterRng graph_rng(init_seed, 1), seq_rng(init_seed, 2), fusion_rng(init_seed, 3), head_rng(init_seed, 4);
  if (config.arm != Arm::Seq) graph_ = std::make_unique<GraphEncoder>(config.graph, params_, graph_rng);
  if (config.arm != Arm::Gat) seq_ = std::make_unique<SeqEncoder>(config.seq, params_, seq_rng);
  if (config.arm == Arm::Dmca) {
    FusionConfig fc;
    fc.width = config.seq.width;
    fc.graph_width = config.fg == GraphFeatures::Nodes ? config.graph.width : 2 * config.graph.width;
    fc.heads = config.fusion_heads;
    fc.refine_heads = config.seq.heads;
    fc.ffn_width = config.fusion_ffn_width;
    fc.dropout = config.seq.dropout;
    fc.activation = config.seq.activation;
    fusion_ = std::make_unique<FusionEncoder>(fc, params_, fusion_rng);
  }
  fc1_ = Linear::create(params_, "mlp.fc1", head_input_width(), config.mlp_hidden, head_rng);
  fc2_ = Linear::create(params_, "mlp.fc2", config.mlp_hidden, config.outputs, head_rng);
}

std::size_t Model::head_input_width() const {
  switch (config_.arm) {
    case Arm::Gat:
      return 2 * config_.graph.width;
    case Arm::Seq:
      return config_.seq.width;
    case Arm::Dmca:
      return config_.seq.width + 2 * config_.graph.width;
  }
  return 0;
}

Tensor Model::forward(std::span<const ModelInput> batch, Mode mode, CounterRng& rng) const {
  if (batch.empty()) throw DataError("model forward on an empty batch");
  GraphEncoderOutput graph_out;
  if (graph_) {
    std::vector<const chem::MolecularGraph*> graphs;
    for (const ModelInput& in : batch) {
      if (!in.graph) throw DataError("model input lacks a molecular graph");
      graphs.push_back(in.graph);
    }
    const GraphBatch gb = make_graph_batch(graphs);
    graph_out = graph_->forward(gb, mode, rng);
    if (config_.arm == Arm::Gat) return fc2_(relu(fc1_(graph_out.pooled)));

    std::vector<Tensor> rows;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (!batch[b].tokens) throw DataError("model input lacks a token sequence");
      const SequenceFeatures seq = seq_->forward(*batch[b].tokens, mode, rng);
      const Tensor pooled_row = slice_rows(graph_out.pooled, b, b + 1);
      const Tensor fg = config_.fg == GraphFeatures::Nodes
                            ? slice_rows(graph_out.node_features, gb.graph_offset[b], gb.graph_offset[b + 1])
                            : pooled_row;
      const JointRepresentation joint = fusion_->forward(seq, fg, mode, rng);
      const Tensor parts[] = {joint.pooled, pooled_row};
      rows.push_back(concat_cols(parts));
    }
    return fc2_(relu(fc1_(rows.size() == 1 ? rows.front() : concat_rows(rows))));
  }

  std::vector<Tensor> rows;
  for (const ModelInput& in : batch) {
    if (!in.tokens) throw DataError("model input lacks a token sequence");
    const SequenceFeatures seq = seq_->forward(*in.tokens, mode, rng);
    rows.push_back(masked_mean_rows(seq.features, seq.mask));
  }
  return fc2_(relu(fc1_(rows.size() == 1 ? rows.front() : concat_rows(rows))));
}

}  // namespace dmca
