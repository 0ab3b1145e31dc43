#pragma once

#include <cstdint>
#include <vector>

#include "dmca/tensor.hpp"

namespace dmca {

struct AdamState {
  std::uint64_t step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

/// Adam with bias-corrected moments.
///
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
///
/// Parameters that received no gradient in the last backward pass are skipped.
class Adam {
 public:
  Adam(std::vector<Tensor> params, double learning_rate = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  /// One update. A non-finite gradient aborts the whole step before anything is modified.
  void step();
  void zero_grad();

  const AdamState& state() const noexcept { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace dmca
