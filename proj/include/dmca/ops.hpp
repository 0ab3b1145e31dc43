#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dmca/rng.hpp"
#include "dmca/tensor.hpp"

namespace dmca {

enum class Mode { Train, Eval };

// Linear algebra -------------------------------------------------------------

/// [m x k] x [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise ----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// Adds a length-n bias to every row of an [m x n] matrix.
Tensor add_bias(const Tensor& x, const Tensor& bias);
/// Multiplies row r of an [m x n] matrix by weight[r]; `weight` holds m values.
Tensor mul_rows(const Tensor& x, const Tensor& weight);

// Activations ----------------------------------------------------------------
// Kinks take the right-hand derivative: d/dx at exactly 0 is the positive-side slope.

Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor relu(const Tensor& x);
Tensor elu(const Tensor& x, double alpha = 1.0);
/// Exact (erf) GELU.
Tensor gelu(const Tensor& x);

// Normalization and regularization ---------------------------------------------

/// Softmax along `axis`, max-subtracted.
Tensor softmax(const Tensor& x, std::size_t axis);
/// Row softmax of an [r x c] matrix restricted to columns with key_mask[c] != 0.
/// Masked columns get probability exactly 0. Every row needs one unmasked column.
Tensor masked_softmax(const Tensor& x, std::span<const std::uint8_t> key_mask);
/// Normalizes over the last axis to zero mean / unit (population) variance, then applies gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
/// Inverted dropout: identity in Eval mode; in Train mode zeroes with probability `rate`
/// and scales survivors by 1 / (1 - rate).
Tensor dropout(const Tensor& x, double rate, Mode mode, CounterRng& rng);

// Structural -----------------------------------------------------------------

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
/// Row lookup; repeated indices accumulate gradient.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);
Tensor reshape(const Tensor& x, Shape shape);

// Segment reductions over rows (segment[i] names the group of row i) ----------

/// Softmax over the entries of each segment; `scores` holds one value per entry.
Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segment, std::size_t num_segments);
Tensor segment_sum(const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments);
Tensor segment_mean(const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments);
/// Columnwise max per segment; ties route the gradient to the first maximal row.
Tensor segment_max(const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments);

// Reductions and losses --------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean negative log-likelihood of `labels` under row-wise softmax of [n x c] logits.
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);
/// Mean squared difference.
Tensor mse(const Tensor& prediction, const Tensor& target);

}  // namespace dmca
