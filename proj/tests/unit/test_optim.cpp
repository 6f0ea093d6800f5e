#include <gtest/gtest.h>

#include <cmath>

#include "focovil/errors.hpp"
#include "focovil/optim.hpp"

using namespace focovil;
using namespace focovil::train;
using ad::Matrix;
using ad::Tensor;

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<Tensor> p{Tensor::parameter(Matrix::Constant(2, 2, 0.3))};
  std::vector<Matrix> g{Matrix::Zero(2, 2)};
  AdamState s;
  for (int i = 0; i < 5; ++i) adam_step(p, g, s, 0.1);
  EXPECT_EQ(p[0].value(), Matrix::Constant(2, 2, 0.3));
  EXPECT_EQ(s.step, 5);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // Bias correction makes the first update lr * g / (|g| + eps) per element.
  Matrix init(1, 3);
  init << 1.0, -2.0, 0.5;
  std::vector<Tensor> p{Tensor::parameter(init)};
  Matrix grad(1, 3);
  grad << 4.0, -0.25, 1e-3;
  std::vector<Matrix> g{grad};
  AdamState s;
  adam_step(p, g, s, 0.01);
  for (int k = 0; k < 3; ++k) {
    const double expect = init(0, k) - 0.01 * grad(0, k) / (std::abs(grad(0, k)) + 1e-8);
    EXPECT_NEAR(p[0].value()(0, k), expect, 1e-12);
  }
}

TEST(Adam, MinimizesQuadraticBowl) {
  Matrix c(1, 4);
  c << 1.0, -3.0, 0.5, 2.0;
  std::vector<Tensor> p{Tensor::parameter(Matrix::Zero(1, 4))};
  AdamState s;
  for (int i = 0; i < 2000; ++i) {
    std::vector<Matrix> g{2.0 * (p[0].value() - c)};
    adam_step(p, g, s, 0.05);
  }
  EXPECT_LT((p[0].value() - c).squaredNorm(), 1e-3);
}

TEST(Adam, ShapeMismatch) {
  std::vector<Tensor> p{Tensor::parameter(Matrix::Zero(2, 2))};
  std::vector<Matrix> g{Matrix::Zero(2, 3)};
  AdamState s;
  EXPECT_THROW(adam_step(p, g, s, 0.1), ShapeMismatch);
}

TEST(Clip, RescalesToMaxNorm) {
  std::vector<Matrix> g{Matrix::Constant(1, 2, 3.0), Matrix::Constant(1, 1, 4.0)};
  // norm = sqrt(9 + 9 + 16) = sqrt(34)
  const double before = clip_global_norm(g, 1.0);
  EXPECT_NEAR(before, std::sqrt(34.0), 1e-12);
  const double after = std::sqrt(g[0].squaredNorm() + g[1].squaredNorm());
  EXPECT_NEAR(after, 1.0, 1e-12);
  EXPECT_NEAR(g[0](0, 0) / g[1](0, 0), 0.75, 1e-12);
}

TEST(Clip, LeavesSmallGradients) {
  std::vector<Matrix> g{Matrix::Constant(1, 2, 0.1)};
  const Matrix before = g[0];
  clip_global_norm(g, 5.0);
  EXPECT_EQ(g[0], before);
}
