#include "focovil/optim.hpp"

#include <cmath>

#include "focovil/errors.hpp"

namespace focovil::train {

void adam_step(std::span<ad::Tensor> params, std::span<const ad::Matrix> grads, AdamState& state,
               double lr, const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw ShapeMismatch("adam_step: params/grads count differ");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
      state.v.push_back(ad::Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeMismatch("adam_step: optimizer state does not match parameter count");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Matrix& w = params[i].mutable_value();
    const ad::Matrix& g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (g.rows() != w.rows() || g.cols() != w.cols() || m.rows() != w.rows() ||
        m.cols() != w.cols()) {
      throw ShapeMismatch("adam_step: shape mismatch at parameter " + std::to_string(i));
    }
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
    w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
  }
}

double clip_global_norm(std::span<ad::Matrix> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

}  // namespace focovil::train
