#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "focovil/metrics.hpp"

namespace focovil::eval {

struct KMeansResult {
  ClusterAssignment assignment;
  Eigen::MatrixXd centroids;  // k x d
  /// Within-cluster SSE after each assignment step.
  std::vector<double> sse;
  int iterations = 0;
  bool converged = false;
};

struct KMeansOptions {
  int max_iterations = 300;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing. A cluster left empty is reseeded with the point farthest from
/// its centroid (taken from a cluster holding more than one point).
/// Throws TooFewRows when rows < k.
KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed,
                    const KMeansOptions& opts = {});

struct GmmResult {
  ClusterAssignment assignment;
  Eigen::MatrixXd means;      // k x d
  Eigen::MatrixXd variances;  // k x d
  Eigen::VectorXd weights;    // k
  /// Mean per-sample log-likelihood at each E step.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
};

struct GmmOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;
  double variance_floor = 1e-6;
};

/// Diagonal-covariance EM seeded from kmeans(x, k, seed). Hard assignment by
/// maximal responsibility (lowest index on ties). Throws TooFewRows.
GmmResult gmm(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const GmmOptions& opts = {});

}  // namespace focovil::eval
