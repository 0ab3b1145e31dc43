#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmca {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Backward rule of a recorded operation.
///
/// `grad_output` is d(loss)/d(output). `grad_inputs[k]` is the accumulation buffer for
/// input k, or an empty span when that input does not require a gradient. Rules must
/// add into the buffers, never overwrite them.
using BackwardRule =
    std::function<void(std::span<const double> grad_output, std::span<const std::span<double>> grad_inputs)>;

namespace detail {
struct Node;
}

/// Dense row-major array of 64-bit reals with an optional gradient record.
///
/// A Tensor is a cheap handle; copies share storage. Values are immutable once an
/// operation has produced them. Leaves (parameters, inputs) may be updated in place
/// through `mutable_values()`, which is how the optimizer steps.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const;

  std::span<const double> values() const;
  double operator[](std::size_t index) const { return values()[index]; }
  double at(std::size_t row, std::size_t col) const;
  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  std::string_view op_name() const;

  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();

  /// In-place access for leaves only; throws for operation outputs.
  std::span<double> mutable_values();

  /// Identity of the underlying storage, for tests and bookkeeping.
  const void* id() const noexcept { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  friend class Tape;
  friend Tensor record_op(std::string_view, Shape, std::vector<double>, std::vector<Tensor>, BackwardRule);

  std::shared_ptr<detail::Node> node_;
};

/// Creates the output of an operation and records it for reverse-mode differentiation.
///
/// Values are checked for finiteness (NumericError names the op). When no input requires a
/// gradient the result is a plain constant and the rule is dropped.
Tensor record_op(std::string_view name, Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                 BackwardRule rule);

/// Topologically ordered record of every operation in a scalar's ancestry.
class Tape {
 public:
  explicit Tape(const Tensor& root);

  std::size_t size() const noexcept { return order_.size(); }
  /// Operation names in topological order (inputs before consumers).
  std::vector<std::string_view> op_names() const;

  /// Seeds d(root)/d(root) = 1 and runs every backward rule once, in reverse order.
  /// Leaf gradients accumulate across calls until `zero_grad`; intermediates are reset.
  void backward();

 private:
  Tensor root_;
  std::vector<std::shared_ptr<detail::Node>> order_;
};

/// Convenience wrapper: `Tape(loss).backward()`. Throws ShapeError for non-scalar losses.
void backward(const Tensor& loss);

}  // namespace dmca
