#include "dmca/optim.hpp"

#include <cmath>
#include <string>

#include "dmca/error.hpp"

namespace dmca {

Adam::Adam(std::vector<Tensor> params, double learning_rate, double beta1, double beta2, double epsilon)
    : params_(std::move(params)) {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ParameterError("Adam: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ParameterError("Adam: epsilon must be positive");
  if (!(learning_rate >= 0.0)) throw ParameterError("Adam: learning rate must be nonnegative");
  state_.learning_rate = learning_rate;
  state_.beta1 = beta1;
  state_.beta2 = beta2;
  state_.epsilon = epsilon;
  for (const Tensor& p : params_) {
    if (!p.is_leaf()) throw Error("Adam: parameters must be leaf tensors");
    state_.first_moment.emplace_back(p.size(), 0.0);
    state_.second_moment.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (!params_[k].has_grad()) continue;
    for (double g : params_[k].grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("Adam: non-finite gradient in parameter " + std::to_string(k) + ", step aborted");
      }
    }
  }
  ++state_.step_count;
  const double t = static_cast<double>(state_.step_count);
  const double correction1 = 1.0 - std::pow(state_.beta1, t);
  const double correction2 = 1.0 - std::pow(state_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto values = p.mutable_values();
    auto& m = state_.first_moment[k];
    auto& v = state_.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = state_.beta1 * m[i] + (1.0 - state_.beta1) * g[i];
      v[i] = state_.beta2 * v[i] + (1.0 - state_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= state_.learning_rate * m_hat / (std::sqrt(v_hat) + state_.epsilon);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

}  // namespace dmca
