#include "focovil/metrics.hpp"

#include <algorithm>

#include "focovil/errors.hpp"

namespace focovil::eval {

namespace {

double choose2(double n) { return n * (n - 1.0) / 2.0; }

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw LengthMismatch(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

void ClusterAssignment::validate() const {
  for (int c : labels) {
    if (c < 0 || c >= k) {
      throw LabelOutOfRange("cluster index " + std::to_string(c) + " outside [0, " +
                            std::to_string(k) + ")");
    }
  }
}

Eigen::MatrixXd contingency(std::span<const int> clusters, std::span<const int> classes) {
  require_same_length(clusters.size(), classes.size(), "contingency");
  int kc = 0, kl = 0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (clusters[i] < 0 || classes[i] < 0) throw LabelOutOfRange("negative cluster or class id");
    kc = std::max(kc, clusters[i] + 1);
    kl = std::max(kl, classes[i] + 1);
  }
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(kc, kl);
  for (std::size_t i = 0; i < clusters.size(); ++i) counts(clusters[i], classes[i]) += 1.0;
  return counts;
}

double purity(const ClusterAssignment& assign, std::span<const int> labels) {
  require_same_length(assign.labels.size(), labels.size(), "purity");
  assign.validate();
  if (labels.empty()) throw LengthMismatch("purity of an empty assignment is undefined");
  const Eigen::MatrixXd w = contingency(assign.labels, labels);
  return w.rowwise().maxCoeff().sum() / static_cast<double>(labels.size());
}

double ari(const ClusterAssignment& assign, std::span<const int> labels) {
  require_same_length(assign.labels.size(), labels.size(), "ari");
  assign.validate();
  if (labels.size() < 2) throw LengthMismatch("ARI needs at least 2 samples");
  const Eigen::MatrixXd w = contingency(assign.labels, labels);
  double index = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) index += choose2(w.data()[i]);
  double sum_k = 0.0, sum_l = 0.0;
  for (Eigen::Index k = 0; k < w.rows(); ++k) sum_k += choose2(w.row(k).sum());
  for (Eigen::Index l = 0; l < w.cols(); ++l) sum_l += choose2(w.col(l).sum());
  const double expected = sum_k * sum_l / choose2(static_cast<double>(labels.size()));
  const double max_index = 0.5 * (sum_k + sum_l);
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

Eigen::MatrixXi confusion_matrix(std::span<const int> predicted, std::span<const int> truth,
                                 int n_classes) {
  require_same_length(predicted.size(), truth.size(), "confusion_matrix");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_classes || predicted[i] < 0 || predicted[i] >= n_classes) {
      throw LabelOutOfRange("label outside [0, " + std::to_string(n_classes) + ")");
    }
    ++m(truth[i], predicted[i]);
  }
  return m;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  require_same_length(predicted.size(), truth.size(), "accuracy");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace focovil::eval
