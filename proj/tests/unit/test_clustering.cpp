#include <gtest/gtest.h>

#include <random>
#include <set>

#include "focovil/clustering.hpp"
#include "focovil/errors.hpp"
#include "focovil/metrics.hpp"

using namespace focovil;
using namespace focovil::eval;

namespace {

struct Blobs {
  Eigen::MatrixXd x;
  std::vector<int> labels;
};

Blobs blobs(std::mt19937_64& gen, int k, int per, int d, double spread) {
  std::normal_distribution<double> n(0.0, 1.0);
  Blobs b;
  b.x.resize(k * per, d);
  for (int c = 0; c < k; ++c) {
    Eigen::RowVectorXd centre = Eigen::RowVectorXd::Zero(d);
    centre(c % d) = 10.0 * (1 + c / d);
    for (int i = 0; i < per; ++i) {
      for (int j = 0; j < d; ++j) b.x(c * per + i, j) = centre(j) + spread * n(gen);
      b.labels.push_back(c);
    }
  }
  return b;
}

}  // namespace

TEST(KMeans, RecoversSeparatedBlobs) {
  std::mt19937_64 gen(1);
  const auto b = blobs(gen, 4, 25, 3, 0.5);
  const auto r = kmeans(b.x, 4, 7);
  EXPECT_TRUE(r.converged);
  EXPECT_DOUBLE_EQ(purity(r.assignment, b.labels), 1.0);
  EXPECT_DOUBLE_EQ(ari(r.assignment, b.labels), 1.0);
}

TEST(KMeans, KEqualsRowsHasZeroSse) {
  std::mt19937_64 gen(2);
  const auto b = blobs(gen, 2, 3, 2, 1.0);
  const auto r = kmeans(b.x, 6, 1);
  EXPECT_NEAR(r.sse.back(), 0.0, 1e-20);
  std::set<int> used(r.assignment.labels.begin(), r.assignment.labels.end());
  EXPECT_EQ(used.size(), 6u);
}

TEST(KMeans, SseNeverIncreases) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(60, 4);
    const auto r = kmeans(x, 5, trial);
    for (std::size_t i = 1; i < r.sse.size(); ++i) EXPECT_LE(r.sse[i], r.sse[i - 1] + 1e-9);
  }
}

TEST(KMeans, DeterministicAndValidated) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(30, 3);
  EXPECT_EQ(kmeans(x, 3, 4).assignment.labels, kmeans(x, 3, 4).assignment.labels);
  EXPECT_THROW(kmeans(x, 31, 0), TooFewRows);
  EXPECT_THROW(kmeans(x, 0, 0), InvalidConfig);
}

TEST(Gmm, RecoversSeparatedBlobs) {
  std::mt19937_64 gen(4);
  const auto b = blobs(gen, 3, 30, 2, 0.7);
  const auto r = gmm(b.x, 3, 5);
  EXPECT_DOUBLE_EQ(purity(r.assignment, b.labels), 1.0);
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
}

TEST(Gmm, LogLikelihoodNeverDecreases) {
  for (int trial = 0; trial < 20; ++trial) {
    std::srand(static_cast<unsigned>(trial));
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(50, 3);
    const auto r = gmm(x, 4, trial);
    ASSERT_FALSE(r.log_likelihood.empty());
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i) {
      EXPECT_GE(r.log_likelihood[i], r.log_likelihood[i - 1] - 1e-9);
    }
  }
}

TEST(Gmm, SingleComponentIsSampleMoments) {
  std::mt19937_64 gen(6);
  const auto b = blobs(gen, 2, 20, 3, 1.0);
  const auto r = gmm(b.x, 1, 0);
  const Eigen::RowVectorXd mean = b.x.colwise().mean();
  EXPECT_LT((r.means.row(0) - mean).cwiseAbs().maxCoeff(), 1e-10);
  const Eigen::RowVectorXd var = (b.x.rowwise() - mean).array().square().colwise().mean();
  EXPECT_LT((r.variances.row(0) - var).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_DOUBLE_EQ(r.weights(0), 1.0);
}

TEST(Gmm, DuplicatePointsStayFinite) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 2);
  x.bottomRows(5).setOnes();
  const auto r = gmm(x, 2, 1);
  for (double ll : r.log_likelihood) EXPECT_TRUE(std::isfinite(ll));
  EXPECT_DOUBLE_EQ(purity(r.assignment, std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1}), 1.0);
}
