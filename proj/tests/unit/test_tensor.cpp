#include <gtest/gtest.h>

#include <random>

#include "focovil/errors.hpp"
#include "focovil/grad_check.hpp"
#include "focovil/tensor.hpp"
#include "support/oracles.hpp"

using namespace focovil;
using namespace focovil::ad;
using focovil::testing::random_matrix;

namespace {

// Runs grad_check over fresh parameters of the given shapes, using a random
// weighting so every output element contributes a distinct coefficient.
GradCheckReport check(const std::vector<Shape>& shapes,
                      const std::function<Tensor(const std::vector<Tensor>&)>& f,
                      std::uint64_t seed = 1, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::vector<Tensor> in;
  for (const auto& s : shapes) in.push_back(Tensor::parameter(random_matrix(gen, s.rows, s.cols, lo, hi)));
  Tensor probe;
  {
    NoGradGuard ng;
    probe = f(in);
  }
  const Tensor w = Tensor::constant(random_matrix(gen, probe.rows(), probe.cols()));
  return grad_check([&] { return sum(mul(f(in), w)); }, in);
}

}  // namespace

TEST(Tensor, SigmoidAtZero) {
  auto x = Tensor::parameter(Matrix::Zero(1, 1));
  auto y = sigmoid(x);
  EXPECT_DOUBLE_EQ(y.item(), 0.5);
  y.backward();
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 0.25);
}

TEST(Tensor, MatmulIdentity) {
  std::mt19937_64 gen(2);
  auto a = Tensor::parameter(random_matrix(gen, 3, 4));
  auto eye = Tensor::constant(Matrix::Identity(3, 3));
  auto y = matmul(eye, a);
  EXPECT_TRUE(y.value().isApprox(a.value()));
  sum(y).backward();
  EXPECT_TRUE((a.grad().array() == 1.0).all());
}

TEST(Tensor, FanOutAccumulates) {
  std::mt19937_64 gen(3);
  auto x = Tensor::parameter(random_matrix(gen, 2, 3));
  auto g = [](const Tensor& t) { return sum(tanh(t)); };
  g(x).backward();
  const Matrix single = x.grad();
  x.zero_grad();
  (g(x) + g(x)).backward();
  EXPECT_TRUE(x.grad().isApprox(2.0 * single, 1e-14));
}

TEST(Tensor, BroadcastRules) {
  auto a = Tensor::constant(Matrix::Ones(3, 4));
  auto row = Tensor::constant(Matrix::Constant(1, 4, 2.0));
  auto col = Tensor::constant(Matrix::Constant(3, 1, 3.0));
  auto s = Tensor::scalar(4.0);
  EXPECT_DOUBLE_EQ(add(a, row).value()(2, 3), 3.0);
  EXPECT_DOUBLE_EQ(mul(a, col).value()(1, 0), 3.0);
  EXPECT_DOUBLE_EQ(sub(a, s).value()(0, 0), -3.0);
  EXPECT_THROW(add(a, Tensor::constant(Matrix::Ones(2, 4))), ShapeMismatch);
  EXPECT_THROW(matmul(a, a), ShapeMismatch);
}

TEST(Tensor, NonFiniteFailsFast) {
  auto x = Tensor::constant(Matrix::Constant(1, 1, 1000.0));
  EXPECT_THROW(exp(x), NonFiniteValue);
  auto z = Tensor::constant(Matrix::Zero(1, 1));
  EXPECT_THROW(div(Tensor::scalar(1.0), z), NonFiniteValue);
}

TEST(Tensor, LogAndSqrtFloors) {
  auto z = Tensor::parameter(Matrix::Zero(1, 1));
  EXPECT_DOUBLE_EQ(log(z).item(), std::log(kEpsilon));
  EXPECT_DOUBLE_EQ(sqrt(z).item(), 0.0);
  sum(sqrt(z)).backward();
  EXPECT_TRUE(std::isfinite(z.grad()(0, 0)));
}

TEST(Tensor, NoGradGuardSkipsRecording) {
  auto x = Tensor::parameter(Matrix::Ones(2, 2));
  NoGradGuard ng;
  auto y = tanh(x);
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(y.is_leaf());
}

TEST(Tensor, DeterministicForward) {
  std::mt19937_64 gen(4);
  auto a = Tensor::constant(random_matrix(gen, 5, 5));
  auto f = [&] { return softmax(matmul(a, transpose(a))).value(); };
  EXPECT_TRUE((f().array() == f().array()).all());
}

TEST(Tensor, SoftmaxAndCrossEntropyValues) {
  Matrix logits(2, 3);
  logits << 1, 2, 3, 0, 0, 0;
  auto p = softmax(Tensor::constant(logits)).value();
  EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-15);
  EXPECT_NEAR(p(1, 2), 1.0 / 3.0, 1e-15);
  const std::vector<int> labels{2, 0};
  const double expect = 0.5 * (-std::log(p(0, 2)) - std::log(p(1, 0)));
  EXPECT_NEAR(cross_entropy(Tensor::constant(logits), labels).item(), expect, 1e-14);
}

TEST(Tensor, MaskedLogSumExp) {
  Matrix a(1, 3);
  a << 1.0, 50.0, 2.0;
  Matrix mask(1, 3);
  mask << 1, 0, 1;
  EXPECT_NEAR(logsumexp(Tensor::constant(a), mask).item(), std::log(std::exp(1.0) + std::exp(2.0)),
              1e-14);
}

// Every primitive passes a central-difference check at 1e-6.
TEST(TensorGrad, Elementwise) {
  const std::vector<Shape> two{{3, 4}, {3, 4}};
  EXPECT_TRUE(check(two, [](auto& x) { return add(x[0], x[1]); }).ok());
  EXPECT_TRUE(check(two, [](auto& x) { return sub(x[0], x[1]); }).ok());
  EXPECT_TRUE(check(two, [](auto& x) { return mul(x[0], x[1]); }).ok());
  EXPECT_TRUE(check({{3, 4}, {3, 4}}, [](auto& x) { return div(x[0], x[1]); }, 5, 0.5, 2.0).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return neg(x[0]); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return scale(x[0], -2.5); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return add_scalar(x[0], 0.7); }).ok());
}

TEST(TensorGrad, Broadcasting) {
  EXPECT_TRUE(check({{3, 4}, {1, 4}}, [](auto& x) { return mul(x[0], x[1]); }).ok());
  EXPECT_TRUE(check({{3, 4}, {3, 1}}, [](auto& x) { return add(x[0], x[1]); }).ok());
  EXPECT_TRUE(check({{3, 4}, {1, 1}}, [](auto& x) { return sub(x[0], x[1]); }).ok());
  EXPECT_TRUE(check({{3, 4}, {3, 1}}, [](auto& x) { return div(x[0], x[1]); }, 6, 0.5, 2.0).ok());
}

TEST(TensorGrad, Structural) {
  EXPECT_TRUE(check({{3, 4}, {4, 2}}, [](auto& x) { return matmul(x[0], x[1]); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return transpose(x[0]); }).ok());
  EXPECT_TRUE(check({{3, 4}, {2, 4}}, [](auto& x) { return concat({x[0], x[1]}, Axis::Rows); }).ok());
  EXPECT_TRUE(check({{3, 4}, {3, 1}}, [](auto& x) { return concat({x[0], x[1]}, Axis::Cols); }).ok());
  EXPECT_TRUE(check({{5, 3}}, [](auto& x) { return slice_rows(x[0], 1, 4); }).ok());
  EXPECT_TRUE(check({{3, 5}}, [](auto& x) { return slice_cols(x[0], 2, 5); }).ok());
}

TEST(TensorGrad, Reductions) {
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return sum(x[0]); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return sum(x[0], Axis::Rows); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return sum(x[0], Axis::Cols); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return mean(x[0]); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return mean(x[0], Axis::Rows); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return mean(x[0], Axis::Cols); }).ok());
}

TEST(TensorGrad, Nonlinearities) {
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return sigmoid(x[0]); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return tanh(x[0]); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return exp(x[0]); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return log(x[0]); }, 7, 0.2, 2.0).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return sqrt(x[0]); }, 8, 0.2, 2.0).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return clamp_min(x[0], 0.0); }, 9, 0.1, 1.0).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return l2_norm(x[0]); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return softmax(x[0]); }).ok());
}

TEST(TensorGrad, LossPrimitives) {
  const std::vector<int> labels{1, 0, 3};
  EXPECT_TRUE(check({{3, 4}}, [&](auto& x) { return cross_entropy(x[0], labels); }).ok());
  Matrix mask = Matrix::Ones(3, 4);
  mask(0, 1) = 0;
  mask(2, 3) = 0;
  EXPECT_TRUE(check({{3, 4}}, [&](auto& x) { return logsumexp(x[0], mask); }).ok());
  EXPECT_TRUE(check({{3, 4}}, [](auto& x) { return logsumexp(x[0]); }).ok());
}

TEST(TensorGrad, RandomCompositeExpression) {
  const auto report = check({{4, 3}, {3, 5}, {1, 5}, {4, 5}, {4, 1}}, [](auto& x) {
    auto h = tanh(add(matmul(x[0], x[1]), x[2]));
    auto g = mul(sigmoid(x[3]), h);
    return div(exp(scale(g, 0.5)), add_scalar(l2_norm(concat({g, x[4]}, Axis::Cols)), 1.0));
  });
  EXPECT_TRUE(report.ok()) << report.max_rel_error;
  EXPECT_LE(report.max_rel_error, 1e-6);
}
