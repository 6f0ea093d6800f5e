#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace focovil::ad {

/// Dense storage of every tensor. Row-major so that flattening, slicing rows,
/// and serialization all follow the same element order.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Floor applied inside log, and in the denominators of sqrt / norm
/// derivatives and cosine similarity.
inline constexpr double kEpsilon = 1e-12;

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

namespace detail {
struct Node;
}

/// Handle to a node of the reverse-mode tape.
///
/// Tensors are rank 2 (scalars are 1x1, vectors 1xn or nx1). Copies share the
/// underlying node. A result records its parents and backward rule only when
/// some parent requires a gradient and recording is enabled (see NoGradGuard).
/// The graph is released when the last handle to its root goes away;
/// parameters are leaves and outlive every graph built on them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Matrix& value() const;
  /// Direct access for optimizers and gradient checks. Only valid on leaves.
  Matrix& mutable_value();
  /// Zero matrix of the tensor's shape when no gradient has been accumulated.
  Matrix grad() const;
  bool has_grad() const;
  Shape shape() const;
  Eigen::Index rows() const { return shape().rows; }
  Eigen::Index cols() const { return shape().cols; }
  bool requires_grad() const;
  bool is_leaf() const;
  const char* op() const;
  /// Value of a 1x1 tensor.
  double item() const;

  /// Reverse pass from this tensor, seeded with ones. Every node reachable
  /// through gradient-requiring edges is visited exactly once, in reverse
  /// topological order; gradients accumulate additively into leaves.
  void backward() const;
  void zero_grad();
  /// Same value, cut from the tape.
  Tensor detach() const;

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

enum class Axis { Rows = 0, Cols = 1 };

// Binary elementwise ops broadcast a 1xc row, an rx1 column, or a 1x1 scalar
// against the other operand; anything else is a ShapeMismatch.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Axis::Rows stacks vertically, Axis::Cols side by side.
Tensor concat(std::span<const Tensor> parts, Axis axis);
Tensor concat(std::initializer_list<Tensor> parts, Axis axis);
Tensor slice_rows(const Tensor& a, Eigen::Index begin, Eigen::Index end);
Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index end);

/// Sum of every element (1x1).
Tensor sum(const Tensor& a);
/// Axis::Rows reduces over rows (1xc); Axis::Cols reduces over columns (rx1).
Tensor sum(const Tensor& a, Axis axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, Axis axis);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
/// log(max(x, kEpsilon)); zero derivative inside the floor.
Tensor log(const Tensor& a);
/// sqrt(max(x, 0)); derivative 0.5 / max(sqrt(x), kEpsilon).
Tensor sqrt(const Tensor& a);
/// max(x, lo) elementwise; zero derivative where clamped.
Tensor clamp_min(const Tensor& a, double lo);
/// Row-wise Euclidean norm (rx1); derivative uses max(norm, kEpsilon).
Tensor l2_norm(const Tensor& a);
/// Row-wise softmax.
Tensor softmax(const Tensor& a);
/// Mean over rows of -log softmax(logits)[label].
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);
/// Row-wise log-sum-exp (rx1) over the entries where mask is nonzero, with
/// max subtraction. Every row must keep at least one entry.
Tensor logsumexp(const Tensor& a, const Matrix& mask);
Tensor logsumexp(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }

namespace detail {

using BackwardFn = std::function<void(Node&)>;

struct Node {
  Matrix value;
  Matrix grad;
  bool has_grad = false;
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;

  void accumulate(const Matrix& g);
};

/// Builds a tape node: checks the value is finite (NonFiniteValue otherwise)
/// and records parents/backward when any parent requires a gradient. Exposed
/// so that tests can build deliberately wrong primitives.
Tensor make_op(Matrix value, const char* op, std::vector<Tensor> parents, BackwardFn backward);

}  // namespace detail

}  // namespace focovil::ad
