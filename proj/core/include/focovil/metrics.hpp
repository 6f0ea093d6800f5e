#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace focovil::eval {

/// Cluster index per row, each in [0, k).
struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;

  /// Throws LabelOutOfRange for an index outside [0, k).
  void validate() const;
};

/// Contingency table: counts(c, l) = rows in cluster c with class l.
/// Cluster/class ids must be non-negative.
Eigen::MatrixXd contingency(std::span<const int> clusters, std::span<const int> classes);

/// (1/|X|) sum_k max_l w_kl.
double purity(const ClusterAssignment& assign, std::span<const int> labels);

/// Adjusted Rand index from pair counts over the contingency table:
///   (sum C(w_kl,2) - E) / (0.5 (sum C(w_k,2) + sum C(w_l,2)) - E),
///   E = sum C(w_k,2) sum C(w_l,2) / C(|X|,2).
/// Returns 1 when both partitions are trivial in the same way (denominator 0).
double ari(const ClusterAssignment& assign, std::span<const int> labels);

/// counts(l, l') = rows of true class l predicted as l'.
Eigen::MatrixXi confusion_matrix(std::span<const int> predicted, std::span<const int> truth,
                                 int n_classes);

/// Fraction of equal entries.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

}  // namespace focovil::eval
