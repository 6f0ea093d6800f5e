#include "focovil/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "focovil/errors.hpp"

namespace focovil::ad {

using detail::Node;

namespace {

thread_local bool t_grad_enabled = true;

Shape shape_of(const Matrix& m) { return {m.rows(), m.cols()}; }

// Result shape of an elementwise op under the broadcasting rules.
Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  auto dim = [&](Eigen::Index x, Eigen::Index y) {
    if (x == y) return x;
    if (x == 1) return y;
    if (y == 1) return x;
    throw ShapeMismatch(std::string(op) + ": cannot broadcast " + a.str() + " with " + b.str());
  };
  return {dim(a.rows, b.rows), dim(a.cols, b.cols)};
}

Matrix expand(const Matrix& m, const Shape& s) {
  if (m.rows() == s.rows && m.cols() == s.cols) return m;
  return m.replicate(s.rows / m.rows(), s.cols / m.cols());
}

// Sums a gradient of the broadcast shape back down to the operand shape.
Matrix reduce_to(const Matrix& g, const Shape& s) {
  if (g.rows() == s.rows && g.cols() == s.cols) return g;
  Matrix r = g;
  if (s.rows == 1 && r.rows() != 1) r = r.colwise().sum().eval();
  if (s.cols == 1 && r.cols() != 1) r = r.rowwise().sum().eval();
  return r;
}

const Matrix& parent_value(Node& n, std::size_t i) { return n.parents[i]->value; }

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, const char* op, Fwd fwd, Deriv deriv) {
  Matrix v = a.value().unaryExpr(fwd);
  return detail::make_op(std::move(v), op, {a}, [deriv](Node& n) {
    const Matrix& x = n.parents[0]->value;
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      g.data()[i] = n.grad.data()[i] * deriv(x.data()[i], n.value.data()[i]);
    }
    n.parents[0]->accumulate(g);
  });
}

}  // namespace

std::string Shape::str() const {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

void Node::accumulate(const Matrix& g) {
  if (!requires_grad) return;
  if (!has_grad) {
    grad = g;
    has_grad = true;
  } else {
    grad += g;
  }
}

Tensor detail::make_op(Matrix value, const char* op, std::vector<Tensor> parents,
                       BackwardFn backward) {
  if (!value.allFinite()) throw NonFiniteValue(std::string("non-finite output of ") + op);
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = op;
  if (t_grad_enabled) {
    const bool needs = std::any_of(parents.begin(), parents.end(),
                                   [](const Tensor& p) { return p.requires_grad(); });
    if (needs) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (auto& p : parents) node->parents.push_back(p.node());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

// ---- Tensor -------------------------------------------------------------

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = "constant";
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->op = "parameter";
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return requires_grad ? parameter(std::move(m)) : constant(std::move(m));
}

const Matrix& Tensor::value() const { return node_->value; }
Matrix& Tensor::mutable_value() { return node_->value; }

Matrix Tensor::grad() const {
  if (node_->has_grad) return node_->grad;
  return Matrix::Zero(node_->value.rows(), node_->value.cols());
}

bool Tensor::has_grad() const { return node_ && node_->has_grad; }
Shape Tensor::shape() const { return shape_of(node_->value); }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return node_->parents.empty(); }
const char* Tensor::op() const { return node_->op; }

double Tensor::item() const {
  if (node_->value.size() != 1) throw ShapeMismatch("item() on " + shape().str());
  return node_->value(0, 0);
}

void Tensor::backward() const {
  if (!node_->requires_grad) return;
  // Iterative post-order DFS: recurrent graphs are thousands of nodes deep.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->accumulate(Matrix::Ones(node_->value.rows(), node_->value.cols()));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->has_grad) n->backward(*n);
  }
}

void Tensor::zero_grad() {
  node_->grad = Matrix();
  node_->has_grad = false;
}

Tensor Tensor::detach() const { return constant(node_->value); }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

// ---- elementwise binary --------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  const Shape s = broadcast_shape(a.shape(), b.shape(), "add");
  Matrix v = expand(a.value(), s) + expand(b.value(), s);
  const Shape sa = a.shape(), sb = b.shape();
  return detail::make_op(std::move(v), "add", {a, b}, [sa, sb](Node& n) {
    n.parents[0]->accumulate(reduce_to(n.grad, sa));
    n.parents[1]->accumulate(reduce_to(n.grad, sb));
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Shape s = broadcast_shape(a.shape(), b.shape(), "sub");
  Matrix v = expand(a.value(), s) - expand(b.value(), s);
  const Shape sa = a.shape(), sb = b.shape();
  return detail::make_op(std::move(v), "sub", {a, b}, [sa, sb](Node& n) {
    n.parents[0]->accumulate(reduce_to(n.grad, sa));
    n.parents[1]->accumulate(reduce_to(-n.grad, sb));
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Shape s = broadcast_shape(a.shape(), b.shape(), "mul");
  Matrix v = expand(a.value(), s).cwiseProduct(expand(b.value(), s));
  const Shape sa = a.shape(), sb = b.shape();
  return detail::make_op(std::move(v), "mul", {a, b}, [sa, sb, s](Node& n) {
    const Matrix ea = expand(parent_value(n, 0), s);
    const Matrix eb = expand(parent_value(n, 1), s);
    n.parents[0]->accumulate(reduce_to(n.grad.cwiseProduct(eb), sa));
    n.parents[1]->accumulate(reduce_to(n.grad.cwiseProduct(ea), sb));
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  const Shape s = broadcast_shape(a.shape(), b.shape(), "div");
  Matrix v = expand(a.value(), s).cwiseQuotient(expand(b.value(), s));
  const Shape sa = a.shape(), sb = b.shape();
  return detail::make_op(std::move(v), "div", {a, b}, [sa, sb, s](Node& n) {
    const Matrix eb = expand(parent_value(n, 1), s);
    n.parents[0]->accumulate(reduce_to(n.grad.cwiseQuotient(eb), sa));
    // d(a/b)/db = -(a/b) / b
    n.parents[1]->accumulate(
        reduce_to(-n.grad.cwiseProduct(n.value).cwiseQuotient(eb), sb));
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor scale(const Tensor& a, double s) {
  return detail::make_op(a.value() * s, "scale", {a},
                         [s](Node& n) { n.parents[0]->accumulate(n.grad * s); });
}

Tensor add_scalar(const Tensor& a, double s) {
  Matrix v = a.value().array() + s;
  return detail::make_op(std::move(v), "add_scalar", {a},
                         [](Node& n) { n.parents[0]->accumulate(n.grad); });
}

// ---- structural ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeMismatch("matmul: " + a.shape().str() + " x " + b.shape().str());
  }
  Matrix v = a.value() * b.value();
  return detail::make_op(std::move(v), "matmul", {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->accumulate(n.grad * n.parents[1]->value.transpose());
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->accumulate(n.parents[0]->value.transpose() * n.grad);
    }
  });
}

Tensor transpose(const Tensor& a) {
  Matrix v = a.value().transpose();
  return detail::make_op(std::move(v), "transpose", {a}, [](Node& n) {
    n.parents[0]->accumulate(n.grad.transpose());
  });
}

Tensor concat(std::span<const Tensor> parts, Axis axis) {
  if (parts.empty()) throw ShapeMismatch("concat of zero tensors");
  Eigen::Index rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (axis == Axis::Rows) {
      if (rows > 0 && p.cols() != cols) throw ShapeMismatch("concat rows: column counts differ");
      cols = p.cols();
      rows += p.rows();
    } else {
      if (cols > 0 && p.rows() != rows) throw ShapeMismatch("concat cols: row counts differ");
      rows = p.rows();
      cols += p.cols();
    }
  }
  Matrix v(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    if (axis == Axis::Rows) {
      v.middleRows(off, p.rows()) = p.value();
      off += p.rows();
    } else {
      v.middleCols(off, p.cols()) = p.value();
      off += p.cols();
    }
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return detail::make_op(std::move(v), "concat", std::move(parents),
                         [axis, offsets](Node& n) {
                           for (std::size_t i = 0; i < n.parents.size(); ++i) {
                             auto& p = *n.parents[i];
                             if (!p.requires_grad) continue;
                             if (axis == Axis::Rows) {
                               p.accumulate(n.grad.middleRows(offsets[i], p.value.rows()));
                             } else {
                               p.accumulate(n.grad.middleCols(offsets[i], p.value.cols()));
                             }
                           }
                         });
}

Tensor concat(std::initializer_list<Tensor> parts, Axis axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice_rows(const Tensor& a, Eigen::Index begin, Eigen::Index end) {
  if (begin < 0 || end > a.rows() || begin >= end) {
    throw ShapeMismatch("slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                        ") of " + a.shape().str());
  }
  Matrix v = a.value().middleRows(begin, end - begin);
  return detail::make_op(std::move(v), "slice_rows", {a}, [begin](Node& n) {
    Matrix g = Matrix::Zero(n.parents[0]->value.rows(), n.parents[0]->value.cols());
    g.middleRows(begin, n.grad.rows()) = n.grad;
    n.parents[0]->accumulate(g);
  });
}

Tensor slice_cols(const Tensor& a, Eigen::Index begin, Eigen::Index end) {
  if (begin < 0 || end > a.cols() || begin >= end) {
    throw ShapeMismatch("slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                        ") of " + a.shape().str());
  }
  Matrix v = a.value().middleCols(begin, end - begin);
  return detail::make_op(std::move(v), "slice_cols", {a}, [begin](Node& n) {
    Matrix g = Matrix::Zero(n.parents[0]->value.rows(), n.parents[0]->value.cols());
    g.middleCols(begin, n.grad.cols()) = n.grad;
    n.parents[0]->accumulate(g);
  });
}

// ---- reductions ----------------------------------------------------------

Tensor sum(const Tensor& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return detail::make_op(std::move(v), "sum", {a}, [](Node& n) {
    const auto& x = n.parents[0]->value;
    n.parents[0]->accumulate(Matrix::Constant(x.rows(), x.cols(), n.grad(0, 0)));
  });
}

Tensor sum(const Tensor& a, Axis axis) {
  Matrix v = axis == Axis::Rows ? Matrix(a.value().colwise().sum())
                                : Matrix(a.value().rowwise().sum());
  const Shape s = a.shape();
  return detail::make_op(std::move(v), "sum_axis", {a},
                         [s](Node& n) { n.parents[0]->accumulate(expand(n.grad, s)); });
}

Tensor mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.shape().size()));
}

Tensor mean(const Tensor& a, Axis axis) {
  const double count = static_cast<double>(axis == Axis::Rows ? a.rows() : a.cols());
  return scale(sum(a, axis), 1.0 / count);
}

// ---- pointwise -----------------------------------------------------------

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        // Split by sign so exp never overflows.
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, "log", [](double x) { return std::log(std::max(x, kEpsilon)); },
      [](double x, double) { return x > kEpsilon ? 1.0 / x : 0.0; });
}

Tensor sqrt(const Tensor& a) {
  return unary(
      a, "sqrt", [](double x) { return std::sqrt(std::max(x, 0.0)); },
      [](double, double y) { return 0.5 / std::max(y, kEpsilon); });
}

Tensor clamp_min(const Tensor& a, double lo) {
  return unary(
      a, "clamp_min", [lo](double x) { return std::max(x, lo); },
      [lo](double x, double) { return x > lo ? 1.0 : 0.0; });
}

Tensor l2_norm(const Tensor& a) {
  Matrix v = a.value().rowwise().norm();
  return detail::make_op(std::move(v), "l2_norm", {a}, [](Node& n) {
    const auto& x = n.parents[0]->value;
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      g.row(r) = x.row(r) * (n.grad(r, 0) / std::max(n.value(r, 0), kEpsilon));
    }
    n.parents[0]->accumulate(g);
  });
}

Tensor softmax(const Tensor& a) {
  const Matrix& x = a.value();
  Matrix v(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto e = (x.row(r).array() - x.row(r).maxCoeff()).exp();
    v.row(r) = e / e.sum();
  }
  return detail::make_op(std::move(v), "softmax", {a}, [](Node& n) {
    const Matrix& y = n.value;
    Matrix g(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = n.grad.row(r).dot(y.row(r));
      g.row(r) = y.row(r).cwiseProduct((n.grad.row(r).array() - dot).matrix());
    }
    n.parents[0]->accumulate(g);
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const Matrix& x = logits.value();
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw ShapeMismatch("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                        logits.shape().str());
  }
  Matrix probs(x.rows(), x.cols());
  double total = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || y >= x.cols()) throw ShapeMismatch("cross_entropy: label out of range");
    const double m = x.row(r).maxCoeff();
    const auto e = (x.row(r).array() - m).exp();
    const double z = e.sum();
    probs.row(r) = e / z;
    total += -(x(r, y) - m - std::log(z));
  }
  Matrix v(1, 1);
  v(0, 0) = total / static_cast<double>(x.rows());
  std::vector<int> lab(labels.begin(), labels.end());
  return detail::make_op(std::move(v), "cross_entropy", {logits},
                         [probs = std::move(probs), lab = std::move(lab)](Node& n) {
                           Matrix g = probs;
                           for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, lab[r]) -= 1.0;
                           g *= n.grad(0, 0) / static_cast<double>(g.rows());
                           n.parents[0]->accumulate(g);
                         });
}

Tensor logsumexp(const Tensor& a, const Matrix& mask) {
  const Matrix& x = a.value();
  if (mask.rows() != x.rows() || mask.cols() != x.cols()) {
    throw ShapeMismatch("logsumexp mask " + shape_of(mask).str() + " vs " + a.shape().str());
  }
  Matrix v(x.rows(), 1);
  Matrix weights = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask(r, c) != 0.0) m = std::max(m, x(r, c));
    }
    if (!std::isfinite(m)) throw ShapeMismatch("logsumexp: row " + std::to_string(r) + " fully masked");
    double z = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        weights(r, c) = std::exp(x(r, c) - m);
        z += weights(r, c);
      }
    }
    weights.row(r) /= z;
    v(r, 0) = m + std::log(z);
  }
  return detail::make_op(std::move(v), "logsumexp", {a},
                         [weights = std::move(weights)](Node& n) {
                           Matrix g = weights;
                           for (Eigen::Index r = 0; r < g.rows(); ++r) g.row(r) *= n.grad(r, 0);
                           n.parents[0]->accumulate(g);
                         });
}

Tensor logsumexp(const Tensor& a) {
  return logsumexp(a, Matrix::Ones(a.rows(), a.cols()));
}

}  // namespace focovil::ad
