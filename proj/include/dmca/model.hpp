#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "dmca/chem/molecule.hpp"
#include "dmca/fusion.hpp"
#include "dmca/graph_encoder.hpp"
#include "dmca/seq_encoder.hpp"

namespace dmca {

/// Model variant: graph branch only, sequence branch only, or both fused by cross-attention.
enum class Arm { Gat, Seq, Dmca };

Arm parse_arm(const std::string& name);
std::string to_string(Arm arm);

struct ModelConfig {
  Arm arm = Arm::Dmca;
  GraphFeatures fg = GraphFeatures::Nodes;
  GraphEncoderConfig graph;
  SeqEncoderConfig seq;
  std::size_t fusion_heads = 4;
  std::size_t fusion_ffn_width = 128;
  std::size_t mlp_hidden = 64;
  /// 1 for regression, the class count for classification.
  std::size_t outputs = 1;
};

struct ModelInput {
  const chem::MolecularGraph* graph = nullptr;
  const TokenSequence* tokens = nullptr;
};

/// Graph encoder and/or sequence encoder, optional fusion, and a two-layer MLP head
/// (`mlp.fc1`, `mlp.fc2`, ReLU between). Head inputs per arm:
///   gat: graph pooled [2F'];  seq: masked mean of F'_s [d];
///   dmca: masked mean of the fused features [d] || graph pooled [2F'].
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t init_seed);

  /// [B x outputs] predictions (regression values or class logits).
  Tensor forward(std::span<const ModelInput> batch, Mode mode, CounterRng& rng) const;

  /// Input width of the MLP head.
  std::size_t head_input_width() const;

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const ModelConfig& config() const noexcept { return config_; }
  const GraphEncoder* graph_encoder() const noexcept { return graph_.get(); }
  const SeqEncoder* seq_encoder() const noexcept { return seq_.get(); }
  const FusionEncoder* fusion() const noexcept { return fusion_.get(); }

 private:
  ModelConfig config_;
  ParamStore params_;
  std::unique_ptr<GraphEncoder> graph_;
  std::unique_ptr<SeqEncoder> seq_;
  std::unique_ptr<FusionEncoder> fusion_;
  Linear fc1_;
  Linear fc2_;
};

}  // namespace dmca
