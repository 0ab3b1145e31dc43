#include "dmca/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dmca/error.hpp"
#include "dmca/fusion.hpp"
#include "dmca/graph_encoder.hpp"
#include "dmca/model.hpp"
#include "dmca/ops.hpp"
#include "dmca/rng.hpp"
#include "dmca/seq_encoder.hpp"

namespace dmca {

GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& loss,
                                std::vector<Tensor> inputs, const GradCheckOptions& options) {
  for (Tensor& t : inputs) {
    if (!t.is_leaf() || !t.requires_grad()) throw Error("gradcheck inputs must be leaves requiring grad");
    t.zero_grad();
  }
  const Tensor value = loss();
  backward(value);
  std::vector<std::vector<double>> analytic;
  for (const Tensor& t : inputs) {
    analytic.emplace_back(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.back().begin());
  }

  GradCheckResult result;
  result.name = name;
  CounterRng pick(options.seed, 0x6772);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<std::size_t> coords(inputs[k].size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coordinates != 0 && coords.size() > options.max_coordinates) {
      const auto perm = random_permutation(coords.size(), pick);
      coords.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(options.max_coordinates));
      std::sort(coords.begin(), coords.end());
    }
    auto values = inputs[k].mutable_values();
    for (std::size_t i : coords) {
      const double original = values[i];
      values[i] = original + options.step;
      const double plus = loss().item();
      values[i] = original - options.step;
      const double minus = loss().item();
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_relative_error || !std::isfinite(rel)) {
        result.max_relative_error = std::isfinite(rel) ? rel : INFINITY;
        std::ostringstream os;
        os.precision(6);
        os << "input " << k << "[" << i << "]: analytic " << a << ", numeric " << numeric;
        result.worst = os.str();
      }
    }
  }
  result.passed = result.max_relative_error < options.tolerance;
  return result;
}

GradCheckSummary run_gradcheck(const GradCheckCase& c, std::size_t points, const GradCheckOptions& options) {
  GradCheckSummary s;
  s.name = c.name;
  for (std::size_t p = 0; p < points; ++p) {
    GradCheckOptions o = options;
    o.seed = options.seed + p;
    const GradCheckResult r = c.run(options.seed + p, o);
    ++s.points;
    if (r.max_relative_error >= s.max_relative_error) {
      s.max_relative_error = r.max_relative_error;
      s.worst = "point " + std::to_string(p) + ", " + r.worst;
    }
    s.passed = s.passed && r.passed;
  }
  return s;
}

namespace {

Tensor random_tensor(Shape shape, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), true);
}

/// Random projection sum(out * R), so every output coordinate reaches the loss.
Tensor project(const Tensor& out, std::uint64_t seed) {
  CounterRng rng(seed, 0x5052);
  std::vector<double> r(out.size());
  for (double& x : r) x = rng.uniform(-1.0, 1.0);
  return sum(mul(out, Tensor(out.shape(), std::move(r))));
}

using Builder = std::function<GradCheckResult(std::uint64_t, const GradCheckOptions&)>;

/// Case over freshly drawn inputs of the given shapes; `f` maps them to the op output.
Builder op_case(const std::string& name, std::vector<Shape> shapes,
                std::function<Tensor(const std::vector<Tensor>&)> f, double lo = -1.0, double hi = 1.0) {
  return [name, shapes, f, lo, hi](std::uint64_t point, const GradCheckOptions& options) {
    CounterRng rng(point, 0x4f50);
    std::vector<Tensor> inputs;
    for (const Shape& s : shapes) inputs.push_back(random_tensor(s, rng, lo, hi));
    return check_gradients(name, [&] { return project(f(inputs), point); }, inputs, options);
  };
}

const std::vector<std::size_t> kSegments = {0, 0, 1, 2, 2, 2};

GraphBatch toy_graph_batch(std::size_t nodes) {
  // A ring with one chord plus a pendant atom, at most `nodes` atoms.
  chem::MolecularGraph g;
  g.atoms.resize(nodes);
  for (std::size_t i = 0; i + 1 < nodes; ++i) g.bonds.push_back({i, i + 1, chem::BondOrder::Single});
  if (nodes > 3) g.bonds.push_back({0, nodes - 2, chem::BondOrder::Single});
  return make_graph_batch(g);
}

TokenSequence toy_tokens(std::size_t content, std::size_t vocab, CounterRng& rng) {
  TokenSequence t;
  t.ids.push_back(kBosId);
  for (std::size_t i = 0; i < content; ++i) t.ids.push_back(kReservedTokens + rng.below(vocab - kReservedTokens));
  t.ids.push_back(kEosId);
  t.attention_mask.assign(t.ids.size(), 1);
  t.original_length = content;
  return t;
}

std::vector<Tensor> all_params(ParamStore& store) { return store.tensors(); }

std::vector<GradCheckCase> op_cases() {
  std::vector<GradCheckCase> cases;
  auto add_case = [&](const std::string& name, std::vector<Shape> shapes,
                      std::function<Tensor(const std::vector<Tensor>&)> f, double lo = -1.0, double hi = 1.0) {
    cases.push_back({name, GradCheckScope::Op, op_case(name, std::move(shapes), std::move(f), lo, hi)});
  };
  add_case("matmul", {{4, 5}, {5, 3}}, [](const auto& x) { return matmul(x[0], x[1]); });
  add_case("transpose", {{3, 4}}, [](const auto& x) { return transpose(x[0]); });
  add_case("add", {{3, 4}, {3, 4}}, [](const auto& x) { return add(x[0], x[1]); });
  add_case("sub", {{3, 4}, {3, 4}}, [](const auto& x) { return sub(x[0], x[1]); });
  add_case("mul", {{3, 4}, {3, 4}}, [](const auto& x) { return mul(x[0], x[1]); });
  add_case("scale", {{3, 4}}, [](const auto& x) { return scale(x[0], -1.7); });
  add_case("add_bias", {{3, 4}, {4}}, [](const auto& x) { return add_bias(x[0], x[1]); });
  add_case("mul_rows", {{3, 4}, {3, 1}}, [](const auto& x) { return mul_rows(x[0], x[1]); });
  add_case("leaky_relu", {{4, 5}}, [](const auto& x) { return leaky_relu(x[0], 0.2); });
  add_case("relu", {{4, 5}}, [](const auto& x) { return relu(x[0]); });
  add_case("elu", {{4, 5}}, [](const auto& x) { return elu(x[0]); });
  add_case("gelu", {{4, 5}}, [](const auto& x) { return gelu(x[0]); });
  add_case("softmax_axis0", {{4, 3}}, [](const auto& x) { return softmax(x[0], 0); }, -3.0, 3.0);
  add_case("softmax_axis1", {{4, 3}}, [](const auto& x) { return softmax(x[0], 1); }, -3.0, 3.0);
  add_case("masked_softmax", {{3, 5}}, [](const auto& x) {
    static const std::uint8_t mask[] = {1, 0, 1, 1, 0};
    return masked_softmax(x[0], mask);
  });
  add_case("layer_norm", {{3, 6}, {6}, {6}}, [](const auto& x) { return layer_norm(x[0], x[1], x[2]); });
  add_case("dropout", {{4, 5}}, [](const auto& x) {
    CounterRng rng(11, 3);
    return dropout(x[0], 0.3, Mode::Train, rng);
  });
  add_case("concat_cols", {{3, 2}, {3, 4}}, [](const auto& x) { return concat_cols(std::span<const Tensor>(x)); });
  add_case("concat_rows", {{2, 3}, {4, 3}}, [](const auto& x) { return concat_rows(std::span<const Tensor>(x)); });
  add_case("slice_cols", {{3, 6}}, [](const auto& x) { return slice_cols(x[0], 1, 4); });
  add_case("slice_rows", {{6, 3}}, [](const auto& x) { return slice_rows(x[0], 2, 5); });
  add_case("gather_rows", {{4, 3}}, [](const auto& x) {
    static const std::size_t idx[] = {2, 0, 2, 3, 2};
    return gather_rows(x[0], idx);
  });
  add_case("reshape", {{3, 4}}, [](const auto& x) { return reshape(x[0], {2, 6}); });
  add_case("segment_softmax", {{6, 1}}, [](const auto& x) { return segment_softmax(x[0], kSegments, 3); }, -3.0,
           3.0);
  add_case("segment_sum", {{6, 3}}, [](const auto& x) { return segment_sum(x[0], kSegments, 3); });
  add_case("segment_mean", {{6, 3}}, [](const auto& x) { return segment_mean(x[0], kSegments, 3); });
  add_case("segment_max", {{6, 3}}, [](const auto& x) { return segment_max(x[0], kSegments, 3); });
  add_case("sum", {{3, 4}}, [](const auto& x) { return sum(x[0]); });
  add_case("mean", {{3, 4}}, [](const auto& x) { return mean(x[0]); });
  add_case("cross_entropy", {{5, 3}}, [](const auto& x) {
    static const std::size_t labels[] = {0, 2, 1, 1, 0};
    return cross_entropy(x[0], labels);
  }, -3.0, 3.0);
  add_case("mse", {{4, 2}, {4, 2}}, [](const auto& x) { return mse(x[0], x[1]); });
  return cases;
}

std::vector<GradCheckCase> module_cases() {
  std::vector<GradCheckCase> cases;
  cases.push_back({"gat_layer", GradCheckScope::Module, [](std::uint64_t point, const GradCheckOptions& options) {
                     ParamStore params;
                     CounterRng init(point, 1);
                     GraphEncoderConfig cfg;
                     cfg.width = 6;
                     cfg.layers = 1;
                     GraphEncoder enc(cfg, params, init);
                     const GraphBatch batch = toy_graph_batch(5);
                     CounterRng data(point, 2);
                     Tensor h = random_tensor({5, 9}, data);
                     auto inputs = all_params(params);
                     inputs.push_back(h);
                     return check_gradients(
                         "gat_layer",
                         [&] {
                           CounterRng rng(point, 3);
                           return project(enc.layer_forward(enc.layers()[0], h, batch, Mode::Train, rng), point);
                         },
                         inputs, options);
                   }});
  cases.push_back({"graph_encoder", GradCheckScope::Module, [](std::uint64_t point, const GradCheckOptions& options) {
                     ParamStore params;
                     CounterRng init(point, 1);
                     GraphEncoderConfig cfg;
                     cfg.width = 6;
                     GraphEncoder enc(cfg, params, init);
                     GraphBatch batch = toy_graph_batch(5);
                     CounterRng data(point, 2);
                     batch.features = random_tensor({5, 9}, data);
                     return check_gradients(
                         "graph_encoder",
                         [&] {
                           CounterRng rng(point, 3);
                           const auto out = enc.forward(batch, Mode::Train, rng);
                           return add(project(out.node_features, point), project(out.pooled, point + 7));
                         },
                         all_params(params), options);
                   }});
  cases.push_back({"seq_encoder", GradCheckScope::Module, [](std::uint64_t point, const GradCheckOptions& options) {
                     ParamStore params;
                     CounterRng init(point, 1);
                     SeqEncoderConfig cfg;
                     cfg.vocab_size = 12;
                     cfg.width = 8;
                     cfg.layers = 2;
                     cfg.heads = 2;
                     cfg.ffn_width = 16;
                     cfg.max_positions = 16;
                     SeqEncoder enc(cfg, params, init);
                     CounterRng data(point, 2);
                     const TokenSequence tokens = toy_tokens(3, cfg.vocab_size, data);
                     return check_gradients(
                         "seq_encoder",
                         [&] {
                           CounterRng rng(point, 3);
                           return project(enc.forward(tokens, Mode::Train, rng).features, point);
                         },
                         all_params(params), options);
                   }});
  cases.push_back({"fusion", GradCheckScope::Module, [](std::uint64_t point, const GradCheckOptions& options) {
                     ParamStore params;
                     CounterRng init(point, 1);
                     FusionConfig cfg;
                     cfg.width = 16;
                     cfg.graph_width = 16;
                     cfg.heads = 2;
                     cfg.refine_heads = 2;
                     cfg.ffn_width = 32;
                     FusionEncoder fusion(cfg, params, init);
                     CounterRng data(point, 2);
                     SequenceFeatures seq{random_tensor({4, 16}, data), {1, 1, 1, 1}};
                     Tensor fg = random_tensor({3, 16}, data);
                     auto inputs = all_params(params);
                     inputs.push_back(seq.features);
                     inputs.push_back(fg);
                     return check_gradients(
                         "fusion",
                         [&] {
                           CounterRng rng(point, 3);
                           const auto joint = fusion.forward(seq, fg, Mode::Train, rng);
                           return add(project(joint.features, point), project(joint.pooled, point + 7));
                         },
                         inputs, options);
                   }});
  return cases;
}

ModelConfig toy_model_config(Arm arm, std::size_t outputs) {
  ModelConfig cfg;
  cfg.arm = arm;
  cfg.graph.width = 16;
  cfg.seq.vocab_size = 12;
  cfg.seq.width = 16;
  cfg.seq.layers = 2;
  cfg.seq.heads = 2;
  cfg.seq.ffn_width = 32;
  cfg.seq.max_positions = 16;
  cfg.fusion_heads = 2;
  cfg.fusion_ffn_width = 32;
  cfg.mlp_hidden = 16;
  cfg.outputs = outputs;
  return cfg;
}

Builder model_case(const std::string& name, Arm arm, bool classification) {
  return [name, arm, classification](std::uint64_t point, const GradCheckOptions& options) {
    const ModelConfig cfg = toy_model_config(arm, classification ? 2 : 1);
    Model model(cfg, point);
    CounterRng data(point, 2);
    std::vector<chem::MolecularGraph> graphs;
    std::vector<TokenSequence> tokens;
    for (const char* smiles : {"CC(=O)O", "c1ccncc1", "N#CC"}) {
      graphs.push_back(chem::featurize(smiles));
      tokens.push_back(toy_tokens(3 + tokens.size(), cfg.seq.vocab_size, data));
    }
    std::vector<ModelInput> batch;
    for (std::size_t i = 0; i < graphs.size(); ++i) batch.push_back({&graphs[i], &tokens[i]});
    std::vector<double> targets;
    for (std::size_t i = 0; i < batch.size(); ++i) targets.push_back(data.uniform(-1.0, 1.0));
    const std::size_t labels[] = {1, 0, 1};
    return check_gradients(
        name,
        [&] {
          CounterRng rng(point, 3);
          const Tensor out = model.forward(batch, Mode::Train, rng);
          return classification ? cross_entropy(out, labels) : mse(out, Tensor({batch.size(), 1}, targets));
        },
        all_params(model.params()), options);
  };
}

}  // namespace

std::vector<GradCheckCase> registered_gradchecks(GradCheckScope scope) {
  switch (scope) {
    case GradCheckScope::Op:
      return op_cases();
    case GradCheckScope::Module:
      return module_cases();
    case GradCheckScope::Model:
      return {{"model_dmca_regression", GradCheckScope::Model, model_case("model_dmca_regression", Arm::Dmca, false)},
              {"model_dmca_classification", GradCheckScope::Model,
               model_case("model_dmca_classification", Arm::Dmca, true)},
              {"model_gat_regression", GradCheckScope::Model, model_case("model_gat_regression", Arm::Gat, false)},
              {"model_seq_regression", GradCheckScope::Model, model_case("model_seq_regression", Arm::Seq, false)}};
  }
  return {};
}

GradCheckCase faulty_gradcheck_case() {
  return {"faulty_square", GradCheckScope::Op, [](std::uint64_t point, const GradCheckOptions& options) {
            CounterRng rng(point, 0x4f50);
            Tensor x = random_tensor({3, 2}, rng, 0.5, 1.5);
            auto square_wrong = [](const Tensor& in) {
              std::vector<double> out(in.values().begin(), in.values().end());
              for (double& v : out) v *= v;
              return record_op("faulty_square", in.shape(), std::move(out), {in},
                               [in](std::span<const double> g, std::span<const std::span<double>> grads) {
                                 const auto v = in.values();
                                 for (std::size_t i = 0; i < v.size(); ++i) grads[0][i] += g[i] * v[i];
                               });
            };
            return check_gradients("faulty_square", [&] { return project(square_wrong(x), point); }, {x}, options);
          }};
}

}  // namespace dmca
