#include "dmca/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dmca/error.hpp"

namespace dmca {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;

ConstMatrixMap as_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatrixMap as_matrix(std::span<double> data, std::size_t rows, std::size_t cols) {
  return MatrixMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_segments(std::span<const std::size_t> segment, std::size_t rows, std::size_t num_segments,
                      const char* op) {
  if (segment.size() != rows) {
    throw ShapeError(std::string(op) + ": segment ids (" + std::to_string(segment.size()) +
                     ") do not match rows (" + std::to_string(rows) + ")");
  }
  for (std::size_t s : segment) {
    if (s >= num_segments) throw ShapeError(std::string(op) + ": segment id out of range");
  }
}

/// Shared body of elementwise unary ops: value and derivative from the input value.
template <typename F, typename DF>
Tensor unary(const char* name, const Tensor& x, F f, DF df) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return record_op(name, x.shape(), std::move(out), {x},
                   [x, df](std::span<const double> g, std::span<const std::span<double>> grads) {
                     const auto v = x.values();
                     for (std::size_t i = 0; i < v.size(); ++i) grads[0][i] += g[i] * df(v[i]);
                   });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  if (k > 0) as_matrix(std::span<double>(out), m, n).noalias() = as_matrix(a.values(), m, k) * as_matrix(b.values(), k, n);
  return record_op("matmul", {m, n}, std::move(out), {a, b},
                   [a, b, m, k, n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     const auto gm = as_matrix(g, m, n);
                     if (!grads[0].empty()) {
                       as_matrix(grads[0], m, k).noalias() += gm * as_matrix(b.values(), k, n).transpose();
                     }
                     if (!grads[1].empty()) {
                       as_matrix(grads[1], k, n).noalias() += as_matrix(a.values(), m, k).transpose() * gm;
                     }
                   });
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<double> out(m * n);
  const auto v = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = v[i * n + j];
  return record_op("transpose", {n, m}, std::move(out), {a},
                   [m, n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t j = 0; j < n; ++j) grads[0][i * n + j] += g[j * m + i];
                   });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return record_op("add", a.shape(), std::move(out), {a, b},
                   [](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (const auto& dst : grads) {
                       if (dst.empty()) continue;
                       for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
                     }
                   });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return record_op("sub", a.shape(), std::move(out), {a, b},
                   [](std::span<const double> g, std::span<const std::span<double>> grads) {
                     if (!grads[0].empty())
                       for (std::size_t i = 0; i < g.size(); ++i) grads[0][i] += g[i];
                     if (!grads[1].empty())
                       for (std::size_t i = 0; i < g.size(); ++i) grads[1][i] -= g[i];
                   });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return record_op("mul", a.shape(), std::move(out), {a, b},
                   [a, b](std::span<const double> g, std::span<const std::span<double>> grads) {
                     const auto av = a.values();
                     const auto bv = b.values();
                     if (!grads[0].empty())
                       for (std::size_t i = 0; i < g.size(); ++i) grads[0][i] += g[i] * bv[i];
                     if (!grads[1].empty())
                       for (std::size_t i = 0; i < g.size(); ++i) grads[1][i] += g[i] * av[i];
                   });
}

Tensor scale(const Tensor& a, double factor) {
  const auto av = a.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return record_op("scale", a.shape(), std::move(out), {a},
                   [factor](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (std::size_t i = 0; i < g.size(); ++i) grads[0][i] += g[i] * factor;
                   });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_matrix(x, "add_bias");
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (bias.size() != n) {
    throw ShapeError("add_bias: bias has " + std::to_string(bias.size()) + " values for " + std::to_string(n) +
                     " columns");
  }
  const auto xv = x.values();
  const auto bv = bias.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] + bv[j];
  return record_op("add_bias", {m, n}, std::move(out), {x, bias},
                   [m, n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     if (!grads[0].empty())
                       for (std::size_t i = 0; i < m * n; ++i) grads[0][i] += g[i];
                     if (!grads[1].empty())
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < n; ++j) grads[1][j] += g[i * n + j];
                   });
}

Tensor mul_rows(const Tensor& x, const Tensor& weight) {
  require_matrix(x, "mul_rows");
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (weight.size() != m) throw ShapeError("mul_rows: one weight per row required");
  const auto xv = x.values();
  const auto wv = weight.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] * wv[i];
  return record_op("mul_rows", {m, n}, std::move(out), {x, weight},
                   [x, weight, m, n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     const auto xv = x.values();
                     const auto wv = weight.values();
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t j = 0; j < n; ++j) {
                         if (!grads[0].empty()) grads[0][i * n + j] += g[i * n + j] * wv[i];
                         if (!grads[1].empty()) grads[1][i] += g[i * n + j] * xv[i * n + j];
                       }
                     }
                   });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw ParameterError("leaky_relu: slope must lie in (0, 1)");
  return unary(
      "leaky_relu", x, [slope](double v) { return v >= 0.0 ? v : slope * v; },
      [slope](double v) { return v >= 0.0 ? 1.0 : slope; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v >= 0.0 ? v : 0.0; }, [](double v) { return v >= 0.0 ? 1.0 : 0.0; });
}

Tensor elu(const Tensor& x, double alpha) {
  return unary(
      "elu", x, [alpha](double v) { return v >= 0.0 ? v : alpha * std::expm1(v); },
      [alpha](double v) { return v >= 0.0 ? 1.0 : alpha * std::exp(v); });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return unary(
      "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
      [inv_sqrt_2pi](double v) {
        return 0.5 * (1.0 + std::erf(v * kInvSqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) throw ShapeError("softmax: axis out of range for " + shape_string(shape));
  const std::size_t len = shape[axis];
  if (len == 0) throw ShapeError("softmax: empty axis");
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= shape[i];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) inner *= shape[i];

  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < len; ++k) peak = std::max(peak, xv[base + k * inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < len; ++k) {
        out[base + k * inner] = std::exp(xv[base + k * inner] - peak);
        total += out[base + k * inner];
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= total;
    }
  }
  std::vector<double> probs = out;
  return record_op("softmax", shape, std::move(out), {x},
                   [probs = std::move(probs), outer, len, inner](std::span<const double> g,
                                                                std::span<const std::span<double>> grads) {
                     for (std::size_t o = 0; o < outer; ++o) {
                       for (std::size_t in = 0; in < inner; ++in) {
                         const std::size_t base = o * len * inner + in;
                         double dot = 0.0;
                         for (std::size_t k = 0; k < len; ++k) dot += g[base + k * inner] * probs[base + k * inner];
                         for (std::size_t k = 0; k < len; ++k) {
                           const std::size_t idx = base + k * inner;
                           grads[0][idx] += probs[idx] * (g[idx] - dot);
                         }
                       }
                     }
                   });
}

Tensor masked_softmax(const Tensor& x, std::span<const std::uint8_t> key_mask) {
  require_matrix(x, "masked_softmax");
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (key_mask.size() != c) throw ShapeError("masked_softmax: mask length differs from column count");
  if (std::none_of(key_mask.begin(), key_mask.end(), [](std::uint8_t m) { return m != 0; })) {
    throw DataError("masked_softmax: every key is masked");
  }
  const auto xv = x.values();
  std::vector<double> out(r * c, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (key_mask[j]) peak = std::max(peak, xv[i * c + j]);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (!key_mask[j]) continue;
      out[i * c + j] = std::exp(xv[i * c + j] - peak);
      total += out[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= total;
  }
  std::vector<double> probs = out;
  return record_op("masked_softmax", {r, c}, std::move(out), {x},
                   [probs = std::move(probs), r, c](std::span<const double> g,
                                                   std::span<const std::span<double>> grads) {
                     for (std::size_t i = 0; i < r; ++i) {
                       double dot = 0.0;
                       for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * probs[i * c + j];
                       for (std::size_t j = 0; j < c; ++j) grads[0][i * c + j] += probs[i * c + j] * (g[i * c + j] - dot);
                     }
                   });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (!(eps > 0.0)) throw ParameterError("layer_norm: eps must be positive");
  if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
  const std::size_t width = x.shape().back();
  if (width == 0) throw ShapeError("layer_norm: last axis has extent 0");
  if (gain.size() != width || bias.size() != width) {
    throw ShapeError("layer_norm: gain/bias must match last-axis extent " + std::to_string(width));
  }
  const std::size_t rows = x.size() / width;
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  std::vector<double> out(xv.size());
  std::vector<double> normalized(xv.size());
  std::vector<double> inv_std(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = xv.data() + i * width;
    double mu = 0.0;
    for (std::size_t j = 0; j < width; ++j) mu += row[j];
    mu /= static_cast<double>(width);
    double var = 0.0;
    for (std::size_t j = 0; j < width; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(width);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < width; ++j) {
      const double z = (row[j] - mu) * inv_std[i];
      normalized[i * width + j] = z;
      out[i * width + j] = z * gv[j] + bv[j];
    }
  }
  return record_op(
      "layer_norm", x.shape(), std::move(out), {x, gain, bias},
      [gain, normalized = std::move(normalized), inv_std = std::move(inv_std), rows, width](
          std::span<const double> g, std::span<const std::span<double>> grads) {
        const auto gv = gain.values();
        std::vector<double> dz(width);
        for (std::size_t i = 0; i < rows; ++i) {
          const double* z = normalized.data() + i * width;
          const double* gr = g.data() + i * width;
          if (!grads[1].empty())
            for (std::size_t j = 0; j < width; ++j) grads[1][j] += gr[j] * z[j];
          if (!grads[2].empty())
            for (std::size_t j = 0; j < width; ++j) grads[2][j] += gr[j];
          if (grads[0].empty()) continue;
          double mean_dz = 0.0;
          double mean_dz_z = 0.0;
          for (std::size_t j = 0; j < width; ++j) {
            dz[j] = gr[j] * gv[j];
            mean_dz += dz[j];
            mean_dz_z += dz[j] * z[j];
          }
          mean_dz /= static_cast<double>(width);
          mean_dz_z /= static_cast<double>(width);
          for (std::size_t j = 0; j < width; ++j) {
            grads[0][i * width + j] += inv_std[i] * (dz[j] - mean_dz - z[j] * mean_dz_z);
          }
        }
      });
}

Tensor dropout(const Tensor& x, double rate, Mode mode, CounterRng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout: rate must lie in [0, 1)");
  if (mode == Mode::Eval || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  const auto xv = x.values();
  std::vector<double> multiplier(xv.size());
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    multiplier[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] = xv[i] * multiplier[i];
  }
  return record_op("dropout", x.shape(), std::move(out), {x},
                   [multiplier = std::move(multiplier)](std::span<const double> g,
                                                        std::span<const std::span<double>> grads) {
                     for (std::size_t i = 0; i < g.size(); ++i) grads[0][i] += g[i] * multiplier[i];
                   });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  for (const Tensor& p : parts) require_matrix(p, "concat_cols");
  const std::size_t m = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != m) throw ShapeError("concat_cols: row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(m * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].values();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(v.data() + i * widths[k], widths[k], out.data() + i * total + offset);
    offset += widths[k];
  }
  return record_op("concat_cols", {m, total}, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                   [widths, m, total](std::span<const double> g, std::span<const std::span<double>> grads) {
                     std::size_t offset = 0;
                     for (std::size_t k = 0; k < widths.size(); ++k) {
                       if (!grads[k].empty()) {
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t j = 0; j < widths[k]; ++j)
                             grads[k][i * widths[k] + j] += g[i * total + offset + j];
                       }
                       offset += widths[k];
                     }
                   });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  for (const Tensor& p : parts) require_matrix(p, "concat_rows");
  const std::size_t n = parts[0].cols();
  std::vector<std::size_t> sizes;
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != n) throw ShapeError("concat_rows: column counts differ");
    sizes.push_back(p.size());
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * n);
  for (const Tensor& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  return record_op("concat_rows", {rows, n}, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                   [sizes](std::span<const double> g, std::span<const std::span<double>> grads) {
                     std::size_t offset = 0;
                     for (std::size_t k = 0; k < sizes.size(); ++k) {
                       if (!grads[k].empty())
                         for (std::size_t i = 0; i < sizes[k]; ++i) grads[k][i] += g[offset + i];
                       offset += sizes[k];
                     }
                   });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_cols");
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  if (begin > end || end > n) throw ShapeError("slice_cols: range out of bounds");
  const std::size_t w = end - begin;
  const auto v = x.values();
  std::vector<double> out(m * w);
  for (std::size_t i = 0; i < m; ++i) std::copy_n(v.data() + i * n + begin, w, out.data() + i * w);
  return record_op("slice_cols", {m, w}, std::move(out), {x},
                   [m, n, w, begin](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t j = 0; j < w; ++j) grads[0][i * n + begin + j] += g[i * w + j];
                   });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  const std::size_t n = x.cols();
  if (begin > end || end > x.rows()) throw ShapeError("slice_rows: range out of bounds");
  const auto v = x.values();
  std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(begin * n),
                          v.begin() + static_cast<std::ptrdiff_t>(end * n));
  return record_op("slice_rows", {end - begin, n}, std::move(out), {x},
                   [begin, n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (std::size_t i = 0; i < g.size(); ++i) grads[0][begin * n + i] += g[i];
                   });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  require_matrix(x, "gather_rows");
  const std::size_t n = x.cols();
  const std::size_t rows = x.rows();
  const auto v = x.values();
  std::vector<double> out(indices.size() * n);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows) throw DataError("gather_rows: index " + std::to_string(indices[r]) + " out of range");
    std::copy_n(v.data() + indices[r] * n, n, out.data() + r * n);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return record_op("gather_rows", {indices.size(), n}, std::move(out), {x},
                   [idx = std::move(idx), n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (std::size_t r = 0; r < idx.size(); ++r)
                       for (std::size_t j = 0; j < n; ++j) grads[0][idx[r] * n + j] += g[r * n + j];
                   });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape: " + shape_string(x.shape()) + " cannot become " + shape_string(shape));
  }
  const auto v = x.values();
  return record_op("reshape", std::move(shape), std::vector<double>(v.begin(), v.end()), {x},
                   [](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (std::size_t i = 0; i < g.size(); ++i) grads[0][i] += g[i];
                   });
}

Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segment, std::size_t num_segments) {
  const std::size_t entries = scores.size();
  require_segments(segment, entries, num_segments, "segment_softmax");
  const auto sv = scores.values();
  std::vector<double> peak(num_segments, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < entries; ++e) peak[segment[e]] = std::max(peak[segment[e]], sv[e]);
  std::vector<double> out(entries);
  std::vector<double> total(num_segments, 0.0);
  for (std::size_t e = 0; e < entries; ++e) {
    out[e] = std::exp(sv[e] - peak[segment[e]]);
    total[segment[e]] += out[e];
  }
  for (std::size_t e = 0; e < entries; ++e) out[e] /= total[segment[e]];
  std::vector<double> probs = out;
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return record_op("segment_softmax", scores.shape(), std::move(out), {scores},
                   [probs = std::move(probs), seg = std::move(seg), num_segments](
                       std::span<const double> g, std::span<const std::span<double>> grads) {
                     std::vector<double> dot(num_segments, 0.0);
                     for (std::size_t e = 0; e < seg.size(); ++e) dot[seg[e]] += g[e] * probs[e];
                     for (std::size_t e = 0; e < seg.size(); ++e) grads[0][e] += probs[e] * (g[e] - dot[seg[e]]);
                   });
}

Tensor segment_sum(const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments) {
  require_matrix(x, "segment_sum");
  const std::size_t n = x.cols();
  require_segments(segment, x.rows(), num_segments, "segment_sum");
  const auto v = x.values();
  std::vector<double> out(num_segments * n, 0.0);
  for (std::size_t r = 0; r < segment.size(); ++r)
    for (std::size_t j = 0; j < n; ++j) out[segment[r] * n + j] += v[r * n + j];
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return record_op("segment_sum", {num_segments, n}, std::move(out), {x},
                   [seg = std::move(seg), n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (std::size_t r = 0; r < seg.size(); ++r)
                       for (std::size_t j = 0; j < n; ++j) grads[0][r * n + j] += g[seg[r] * n + j];
                   });
}

Tensor segment_mean(const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments) {
  require_matrix(x, "segment_mean");
  const std::size_t n = x.cols();
  require_segments(segment, x.rows(), num_segments, "segment_mean");
  std::vector<double> count(num_segments, 0.0);
  for (std::size_t s : segment) count[s] += 1.0;
  for (double c : count)
    if (c == 0.0) throw DataError("segment_mean: empty segment");
  const auto v = x.values();
  std::vector<double> out(num_segments * n, 0.0);
  for (std::size_t r = 0; r < segment.size(); ++r)
    for (std::size_t j = 0; j < n; ++j) out[segment[r] * n + j] += v[r * n + j];
  for (std::size_t s = 0; s < num_segments; ++s)
    for (std::size_t j = 0; j < n; ++j) out[s * n + j] /= count[s];
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  return record_op("segment_mean", {num_segments, n}, std::move(out), {x},
                   [seg = std::move(seg), count = std::move(count), n](std::span<const double> g,
                                                                     std::span<const std::span<double>> grads) {
                     for (std::size_t r = 0; r < seg.size(); ++r)
                       for (std::size_t j = 0; j < n; ++j) grads[0][r * n + j] += g[seg[r] * n + j] / count[seg[r]];
                   });
}

Tensor segment_max(const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments) {
  require_matrix(x, "segment_max");
  const std::size_t n = x.cols();
  require_segments(segment, x.rows(), num_segments, "segment_max");
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  const auto v = x.values();
  std::vector<std::size_t> argmax(num_segments * n, kNone);
  for (std::size_t r = 0; r < segment.size(); ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t& best = argmax[segment[r] * n + j];
      if (best == kNone || v[r * n + j] > v[best * n + j]) best = r;
    }
  }
  std::vector<double> out(num_segments * n);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (argmax[k] == kNone) throw DataError("segment_max: empty segment");
    out[k] = v[argmax[k] * n + k % n];
  }
  return record_op("segment_max", {num_segments, n}, std::move(out), {x},
                   [argmax = std::move(argmax), n](std::span<const double> g,
                                                   std::span<const std::span<double>> grads) {
                     for (std::size_t k = 0; k < argmax.size(); ++k) grads[0][argmax[k] * n + k % n] += g[k];
                   });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return record_op("sum", {1}, {total}, {x}, [](std::span<const double> g, std::span<const std::span<double>> grads) {
    for (double& d : grads[0]) d += g[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw ShapeError("mean: empty tensor");
  const double n = static_cast<double>(x.size());
  double total = 0.0;
  for (double v : x.values()) total += v;
  return record_op("mean", {1}, {total / n}, {x},
                   [n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     for (double& d : grads[0]) d += g[0] / n;
                   });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  require_matrix(logits, "cross_entropy");
  const std::size_t n = logits.rows();
  const std::size_t c = logits.cols();
  if (labels.size() != n) throw ShapeError("cross_entropy: one label per row required");
  if (n == 0 || c == 0) throw ShapeError("cross_entropy: empty logits");
  for (std::size_t label : labels) {
    if (label >= c) throw DataError("cross_entropy: label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
  }
  const auto v = logits.values();
  std::vector<double> probs(n * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = v.data() + i * c;
    const double peak = *std::max_element(row, row + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += std::exp(row[j] - peak);
    const double log_total = std::log(total);
    loss -= row[labels[i]] - peak - log_total;
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - peak - log_total);
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return record_op("cross_entropy", {1}, {loss / static_cast<double>(n)}, {logits},
                   [probs = std::move(probs), lab = std::move(lab), n, c](std::span<const double> g,
                                                                        std::span<const std::span<double>> grads) {
                     const double s = g[0] / static_cast<double>(n);
                     for (std::size_t i = 0; i < n; ++i) {
                       for (std::size_t j = 0; j < c; ++j) {
                         grads[0][i * c + j] += s * (probs[i * c + j] - (j == lab[i] ? 1.0 : 0.0));
                       }
                     }
                   });
}

Tensor mse(const Tensor& prediction, const Tensor& target) {
  require_same_shape(prediction, target, "mse");
  if (prediction.size() == 0) throw ShapeError("mse: empty input");
  const auto pv = prediction.values();
  const auto tv = target.values();
  const double n = static_cast<double>(pv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) total += (pv[i] - tv[i]) * (pv[i] - tv[i]);
  return record_op("mse", {1}, {total / n}, {prediction, target},
                   [prediction, target, n](std::span<const double> g, std::span<const std::span<double>> grads) {
                     const auto pv = prediction.values();
                     const auto tv = target.values();
                     for (std::size_t i = 0; i < pv.size(); ++i) {
                       const double d = 2.0 * (pv[i] - tv[i]) / n * g[0];
                       if (!grads[0].empty()) grads[0][i] += d;
                       if (!grads[1].empty()) grads[1][i] -= d;
                     }
                   });
}

}  // namespace dmca
