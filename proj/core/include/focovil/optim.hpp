#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "focovil/tensor.hpp"

namespace focovil::train {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one matrix per parameter.
struct AdamState {
  std::int64_t step = 0;
  std::vector<ad::Matrix> m;
  std::vector<ad::Matrix> v;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam update, applied in place to the parameter leaves.
/// Moments are created on first use. Throws ShapeMismatch when a gradient or
/// moment does not match its parameter.
void adam_step(std::span<ad::Tensor> params, std::span<const ad::Matrix> grads, AdamState& state,
               double lr, const AdamConfig& cfg = {});

/// Rescales all gradients together so their joint L2 norm is at most
/// max_norm. Returns the norm before clipping.
double clip_global_norm(std::span<ad::Matrix> grads, double max_norm);

}  // namespace focovil::train
