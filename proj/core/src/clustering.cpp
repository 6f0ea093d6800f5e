#include "focovil/clustering.hpp"

#include <cmath>
#include <limits>

#include "focovil/errors.hpp"
#include "focovil/rng.hpp"

namespace focovil::eval {

namespace {

void require_rows(const Eigen::MatrixXd& x, int k) {
  if (k < 1) throw InvalidConfig("cluster count must be >= 1");
  if (x.rows() < k) {
    throw TooFewRows(std::to_string(x.rows()) + " rows for " + std::to_string(k) + " clusters");
  }
}

Eigen::MatrixXd plus_plus_seeds(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd c(k, x.cols());
  c.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < k; ++j) {
    const double total = d2.sum();
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (target < acc && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave target past the final sum; fall back to the
      // last point with nonzero weight.
      if (acc <= target) {
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (d2(i) > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    c.row(j) = x.row(pick);
    d2 = d2.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
  }
  return c;
}

// Nearest centroid per row (lowest index on ties); returns the SSE.
double assign(const Eigen::MatrixXd& x, const Eigen::MatrixXd& c, std::vector<int>& labels,
              Eigen::VectorXd& dist) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
      const double d = (x.row(i) - c.row(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    dist(i) = best_d;
    sse += best_d;
  }
  return sse;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const KMeansOptions& opts) {
  require_rows(x, k);
  Rng rng(derive_seed(seed, 0x4B4D));
  const Eigen::Index n = x.rows();
  KMeansResult out;
  out.centroids = plus_plus_seeds(x, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<int> next(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd dist(n);

  for (int it = 0; it < opts.max_iterations; ++it) {
    out.sse.push_back(assign(x, out.centroids, next, dist));
    out.iterations = it + 1;
    if (next == labels) {
      out.converged = true;
      break;
    }
    labels = next;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) {
        out.centroids.row(j) = sums.row(j) / counts[static_cast<std::size_t>(j)];
      }
    }
    for (int j = 0; j < k; ++j) {
      if (counts[static_cast<std::size_t>(j)] > 0) continue;
      Eigen::Index far = -1;
      double far_d = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int owner = labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(owner)] < 2) continue;
        const double d = (x.row(i) - out.centroids.row(owner)).squaredNorm();
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far < 0) break;
      --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(far)])];
      labels[static_cast<std::size_t>(far)] = j;
      counts[static_cast<std::size_t>(j)] = 1;
      out.centroids.row(j) = x.row(far);
    }
  }
  out.assignment.labels = labels.front() < 0 ? next : labels;
  out.assignment.k = k;
  return out;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

// log N(x | mu, diag(var)) for every row/component, plus log weights.
Eigen::MatrixXd weighted_log_density(const Eigen::MatrixXd& x, const GmmResult& g) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = g.means.rows();
  const double d = static_cast<double>(x.cols());
  Eigen::MatrixXd out(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double lw = g.weights(j) > 0.0 ? std::log(g.weights(j))
                                          : -std::numeric_limits<double>::infinity();
    const Eigen::RowVectorXd inv = g.variances.row(j).cwiseInverse();
    const double log_det = g.variances.row(j).array().log().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double maha = ((x.row(i) - g.means.row(j)).array().square() * inv.array()).sum();
      out(i, j) = lw - 0.5 * (d * kLog2Pi + log_det + maha);
    }
  }
  return out;
}

// Converts weighted log densities to responsibilities in place and returns
// the mean per-sample log-likelihood.
double normalize_rows(Eigen::MatrixXd& logp) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < logp.rows(); ++i) {
    const double m = logp.row(i).maxCoeff();
    const double lse = m + std::log((logp.row(i).array() - m).exp().sum());
    ll += lse;
    logp.row(i) = (logp.row(i).array() - lse).exp();
  }
  return ll / static_cast<double>(logp.rows());
}

}  // namespace

GmmResult gmm(const Eigen::MatrixXd& x, int k, std::uint64_t seed, const GmmOptions& opts) {
  require_rows(x, k);
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  const KMeansResult init = kmeans(x, k, seed);

  GmmResult g;
  g.means = init.centroids;
  g.variances = Eigen::MatrixXd::Constant(k, d, opts.variance_floor);
  g.weights = Eigen::VectorXd::Zero(k);
  {
    Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(k, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int j = init.assignment.labels[static_cast<std::size_t>(i)];
      g.weights(j) += 1.0;
      sq.row(j) += (x.row(i) - g.means.row(j)).array().square().matrix();
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      if (g.weights(j) > 0.0) {
        g.variances.row(j) = (sq.row(j) / g.weights(j)).cwiseMax(opts.variance_floor);
      }
    }
    g.weights /= static_cast<double>(n);
  }

  Eigen::MatrixXd resp;
  for (int it = 0; it < opts.max_iterations; ++it) {
    resp = weighted_log_density(x, g);
    const double ll = normalize_rows(resp);
    g.iterations = it + 1;
    const bool done = !g.log_likelihood.empty() && ll - g.log_likelihood.back() < opts.tolerance;
    g.log_likelihood.push_back(ll);
    if (done) {
      g.converged = true;
      break;
    }
    const Eigen::VectorXd nk = resp.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < k; ++j) {
      if (nk(j) <= 0.0) {
        g.weights(j) = 0.0;
        continue;
      }
      g.weights(j) = nk(j) / static_cast<double>(n);
      const Eigen::RowVectorXd mu = (resp.col(j).transpose() * x) / nk(j);
      const Eigen::RowVectorXd var =
          (resp.col(j).transpose() * (x.rowwise() - mu).array().square().matrix()) / nk(j);
      g.means.row(j) = mu;
      g.variances.row(j) = var.cwiseMax(opts.variance_floor);
    }
  }
  if (!g.converged) {
    resp = weighted_log_density(x, g);
    normalize_rows(resp);
  }

  g.assignment.k = k;
  g.assignment.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    resp.row(i).maxCoeff(&best);
    g.assignment.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return g;
}

}  // namespace focovil::eval
