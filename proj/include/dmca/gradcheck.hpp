#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dmca/tensor.hpp"

namespace dmca {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor). Central
  /// differences of an O(10) loss carry ~1e-10 rounding noise, so smaller gradients are
  /// effectively held to an absolute bound of tolerance * floor.
  double floor = 1e-5;
  /// Coordinates checked per input tensor; 0 checks all of them.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  std::string name;
  bool passed = true;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  /// "input k[index]: analytic a, numeric n" for the worst coordinate.
  std::string worst;
};

/// Compares reverse-mode gradients of the scalar `loss` with central differences in every
/// (or a sampled subset of) coordinate of `inputs`, which must be leaves requiring grad.
/// `loss` must rebuild the graph from the current input values on every call.
GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& loss,
                                std::vector<Tensor> inputs, const GradCheckOptions& options);

enum class GradCheckScope { Op, Module, Model };

/// One registered check; `run` builds fresh random inputs from `point` and checks them.
struct GradCheckCase {
  std::string name;
  GradCheckScope scope;
  std::function<GradCheckResult(std::uint64_t point, const GradCheckOptions&)> run;
};

std::vector<GradCheckCase> registered_gradchecks(GradCheckScope scope);

/// A deliberately wrong backward rule (d/dx x^2 reported as x), for testing the harness.
GradCheckCase faulty_gradcheck_case();

struct GradCheckSummary {
  std::string name;
  bool passed = true;
  double max_relative_error = 0.0;
  std::size_t points = 0;
  std::string worst;
};

/// Runs `c` at `points` evaluation points (seeds base_seed, base_seed + 1, ...).
GradCheckSummary run_gradcheck(const GradCheckCase& c, std::size_t points, const GradCheckOptions& options);

}  // namespace dmca
