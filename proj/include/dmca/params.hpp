#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dmca/rng.hpp"
#include "dmca/tensor.hpp"

namespace dmca {

/// Insertion-ordered registry of named trainable tensors.
class ParamStore {
 public:
  /// Registers a zero-gradient leaf; names must be unique.
  Tensor& add(const std::string& name, Tensor tensor);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialized [fan_in x fan_out] matrix.
  Tensor& add_uniform(const std::string& name, Shape shape, std::size_t fan_in, CounterRng& rng);
  Tensor& add_constant(const std::string& name, Shape shape, double value);

  bool contains(const std::string& name) const;
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const noexcept { return tensors_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<Tensor>& tensors() noexcept { return tensors_; }
  const std::vector<Tensor>& tensors() const noexcept { return tensors_; }

  /// Total number of scalar parameters.
  std::size_t parameter_count() const;
  /// Scalar parameters in tensors whose names start with `prefix`.
  std::size_t parameter_count(const std::string& prefix) const;

  void zero_grad();

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
};

/// Checkpoint file: a text header listing format version, dtype and every array's
/// name and shape, terminated by an `end` line, followed by the raw little-endian
/// float64 values of each array in header order.
///
///     DMCA-CHECKPOINT 1
///     dtype float64
///     count 2
///     param gat.0.W 2 9 64
///     param gat.0.Wa 2 128 1
///     end
///     <binary payload>
struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_checkpoint(const std::filesystem::path& path);

std::vector<NamedArray> snapshot(const ParamStore& params);
/// Copies values into existing parameters; names and shapes must match exactly.
void restore(ParamStore& params, const std::vector<NamedArray>& arrays);

}  // namespace dmca
