#include "dmca/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "dmca/error.hpp"

namespace dmca {
namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardRule backward;

  bool leaf() const { return inputs.empty(); }
};

}  // namespace detail

namespace {

void require_finite(std::string_view op, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError("non-finite value produced by '" + std::string(op) + "' at flat index " +
                         std::to_string(i));
    }
  }
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("shape " + shape_string(shape) + " does not match " + std::to_string(values.size()) +
                     " values");
  }
  require_finite("tensor", values);
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->values = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
  if (!node_) throw Error("access to an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("rows() needs a matrix, got " + shape_string(shape()));
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols() needs a matrix, got " + shape_string(shape()));
  return shape()[1];
}

std::size_t Tensor::size() const { return values().size(); }

std::span<const double> Tensor::values() const {
  if (!node_) throw Error("access to an undefined tensor");
  return node_->values;
}

double Tensor::at(std::size_t row, std::size_t col) const {
  const std::size_t c = cols();
  if (row >= rows() || col >= c) throw ShapeError("index out of range");
  return node_->values[row * c + col];
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() needs a single-element tensor, got " + shape_string(shape()));
  return node_->values[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::is_leaf() const { return node_ && node_->leaf(); }

std::string_view Tensor::op_name() const { return node_ ? node_->op : std::string_view{}; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw Error("tensor has no gradient");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

std::span<double> Tensor::mutable_values() {
  if (!node_) throw Error("access to an undefined tensor");
  if (!node_->leaf()) throw Error("mutable_values() is only allowed on leaf tensors");
  return node_->values;
}

Tensor record_op(std::string_view name, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                 BackwardRule rule) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError(std::string(name) + ": output shape " + shape_string(shape) + " does not match " +
                     std::to_string(values.size()) + " values");
  }
  require_finite(name, values);
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->op = name;
  const bool needs_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (needs_grad) {
    node->requires_grad = true;
    node->backward = std::move(rule);
    node->inputs.reserve(inputs.size());
    for (const Tensor& t : inputs) node->inputs.push_back(t.node_);
  }
  return Tensor(std::move(node));
}

Tape::Tape(const Tensor& root) : root_(root) {
  if (!root.defined()) throw Error("cannot build a tape from an undefined tensor");
  // Iterative post-order DFS over operation nodes that participate in differentiation.
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<std::shared_ptr<detail::Node>, std::size_t>> stack;
  if (root.node_->requires_grad && !root.node_->leaf()) {
    stack.emplace_back(root.node_, 0);
    visited.insert(root.node_.get());
  }
  while (!stack.empty()) {
    auto& [node, next_input] = stack.back();
    if (next_input < node->inputs.size()) {
      const std::shared_ptr<detail::Node>& child = node->inputs[next_input++];
      if (child->requires_grad && !child->leaf() && visited.insert(child.get()).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order_.push_back(node);
    stack.pop_back();
  }
}

std::vector<std::string_view> Tape::op_names() const {
  std::vector<std::string_view> names;
  names.reserve(order_.size());
  for (const auto& node : order_) names.push_back(node->op);
  return names;
}

void Tape::backward() {
  detail::Node& root = *root_.node_;
  if (root.values.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(root.shape));
  }
  if (!root.requires_grad) throw Error("backward() on a tensor that does not require gradients");
  for (const auto& node : order_) node->grad.assign(node->values.size(), 0.0);
  if (root.leaf()) {
    if (root.grad.empty()) root.grad.assign(1, 0.0);
    root.grad[0] += 1.0;
    return;
  }
  root.grad[0] = 1.0;

  std::vector<std::span<double>> buffers;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::Node& node = **it;
    buffers.assign(node.inputs.size(), std::span<double>{});
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      detail::Node& in = *node.inputs[k];
      if (!in.requires_grad) continue;
      if (in.grad.empty()) in.grad.assign(in.values.size(), 0.0);
      buffers[k] = in.grad;
    }
    node.backward(node.grad, buffers);
  }
}

void backward(const Tensor& loss) { Tape(loss).backward(); }

}  // namespace dmca
