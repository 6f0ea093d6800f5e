#pragma once

#include <functional>
#include <span>
#include <vector>

#include "focovil/tensor.hpp"

namespace focovil::ad {

struct GradCheckFailure {
  std::size_t input = 0;
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::vector<GradCheckFailure> failures;

  bool ok() const { return failures.empty(); }
};

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-6;
  /// Relative error is |a - n| / max(|a|, |n|, scale_floor); the floor keeps
  /// vanishing gradients from turning round-off into large ratios.
  double scale_floor = 1e-3;
  /// Stop recording failures after this many (the maximum is still exact).
  std::size_t max_failures = 32;
};

/// Compares the reverse-mode gradient of a scalar function against central
/// differences (f(x+h) - f(x-h)) / 2h, element by element.
///
/// `f` must rebuild its graph from the current values of `inputs` on every
/// call; inputs are perturbed in place and restored afterwards.
GradCheckReport grad_check(const std::function<Tensor()>& f, std::span<Tensor> inputs,
                           const GradCheckOptions& opts = {});

}  // namespace focovil::ad
