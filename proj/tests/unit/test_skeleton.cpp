#include <gtest/gtest.h>

#include <Eigen/LU>
#include <random>

#include "focovil/errors.hpp"
#include "focovil/skeleton.hpp"
#include "support/oracles.hpp"

using namespace focovil;
using namespace focovil::skeleton;

namespace {

ActionSequence random_sequence(std::mt19937_64& gen, int T, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ActionSequence s;
  for (int t = 0; t < T; ++t) {
    Pose p(n, 3);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(gen);
    s.frames.push_back(p);
  }
  return s;
}

ActionSequence rigid(const ActionSequence& s, const Eigen::Matrix3d& q, const Eigen::RowVector3d& c) {
  ActionSequence out = s;
  for (auto& f : out.frames) f = ((f * q.transpose()).rowwise() + c).eval();
  return out;
}

double max_diff(const ActionSequence& a, const ActionSequence& b) {
  double m = 0.0;
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    m = std::max(m, (a.frames[t] - b.frames[t]).cwiseAbs().maxCoeff());
  }
  return m;
}

}  // namespace

TEST(Topology, RejectsRepeatedOrOutOfRangeLandmarks) {
  Topology t = Topology::with_default_landmarks(16);
  EXPECT_NO_THROW(t.validate());
  t.rhip = t.root;
  EXPECT_THROW(t.validate(), InvalidTopology);
  EXPECT_THROW(Topology::with_default_landmarks(3), InvalidTopology);
  t = Topology::with_default_landmarks(16);
  t.spine = 16;
  EXPECT_THROW(t.validate(), InvalidTopology);
}

TEST(Normalize, IdentityWhenAlreadyUnitRangeAndCentered) {
  ActionSequence s;
  Pose a(2, 3), b(2, 3);
  a << -1.0, 0.5, -0.25, 0.3, -1.0, 0.25;
  b << 1.0, -0.5, 0.0, 0.2, 1.0, -0.1;
  s.frames = {a, b};
  const auto out = normalize_coordinates(s);
  EXPECT_EQ(max_diff(out, s), 0.0);
}

TEST(Normalize, ConstantSequenceIsZeroExtent) {
  ActionSequence s;
  Pose p(1, 3);
  p << 5.0, 5.0, 5.0;
  s.frames = {p, p, p};
  EXPECT_THROW(normalize_coordinates(s), ZeroExtentSequence);
}

TEST(Normalize, OutputInUnitBoxWithUniformScale) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = random_sequence(gen, 7, 5);
    for (auto& f : s.frames) f.col(0) = (f.col(0).array() + 1.0) * 2.0;  // x spans [0, 4]
    const auto out = normalize_coordinates(s);
    double peak = 0.0;
    for (const auto& f : out.frames) {
      EXPECT_LE(f.cwiseAbs().maxCoeff(), 1.0);
      peak = std::max(peak, f.cwiseAbs().maxCoeff());
    }
    EXPECT_DOUBLE_EQ(peak, 1.0);
    // Uniform scale: ratios of pairwise differences are preserved.
    const double before = (s.frames[1](2, 0) - s.frames[0](2, 0)) / (s.frames[1](3, 1) - s.frames[0](3, 1));
    const double after =
        (out.frames[1](2, 0) - out.frames[0](2, 0)) / (out.frames[1](3, 1) - out.frames[0](3, 1));
    EXPECT_NEAR(before, after, 1e-9 * std::max(1.0, std::abs(before)));
  }
}

TEST(Resample, SameLengthIsBitIdentical) {
  std::mt19937_64 gen(1);
  const auto s = random_sequence(gen, 50, 4);
  EXPECT_EQ(max_diff(resample(s, 50), s), 0.0);
}

TEST(Resample, TwoFramesToThreeGivesMidpoint) {
  std::mt19937_64 gen(2);
  const auto s = random_sequence(gen, 2, 4);
  const auto out = resample(s, 3);
  ASSERT_EQ(out.length(), 3);
  EXPECT_EQ(max_diff(ActionSequence{{out.frames[0]}}, ActionSequence{{s.frames[0]}}), 0.0);
  EXPECT_EQ(max_diff(ActionSequence{{out.frames[2]}}, ActionSequence{{s.frames[1]}}), 0.0);
  const Pose mid = (s.frames[0] + s.frames[1]) / 2.0;
  EXPECT_LE((out.frames[1] - mid).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Resample, RampMatchesPiecewiseLinearOracle) {
  std::mt19937_64 gen(4);
  const auto s = random_sequence(gen, 7, 3);
  const int L = 50;
  const auto out = resample(s, L);
  ASSERT_EQ(out.length(), L);
  for (int k = 0; k < L; ++k) {
    const double time = static_cast<double>(k) * 6.0 / (L - 1);
    const int lo = std::min(static_cast<int>(std::floor(time)), 5);
    const double f = time - lo;
    for (int j = 0; j < 3; ++j) {
      for (int a = 0; a < 3; ++a) {
        const double expect = s.frames[lo](j, a) + f * (s.frames[lo + 1](j, a) - s.frames[lo](j, a));
        EXPECT_NEAR(out.frames[k](j, a), expect, 1e-12);
      }
    }
  }
  EXPECT_EQ(max_diff(ActionSequence{{out.frames.back()}}, ActionSequence{{s.frames.back()}}), 0.0);
}

TEST(Resample, RejectsShortInput) {
  std::mt19937_64 gen(5);
  EXPECT_THROW(resample(random_sequence(gen, 1, 4), 10), SequenceTooShort);
}

TEST(Rotation, HandDerivedFrame) {
  Pose p = Pose::Zero(4, 3);
  p.row(1) << 0, 1, 0;
  p.row(2) << -1, 0, 0;
  p.row(3) << 1, 0, 0;
  const auto R = build_rotation(p, Topology::with_default_landmarks(4));
  EXPECT_TRUE(R.column(0).isApprox(Eigen::Vector3d(0, 1, 0)));
  EXPECT_TRUE(R.column(1).isApprox(Eigen::Vector3d(-1, 0, 0)));
  EXPECT_TRUE(R.column(2).isApprox(Eigen::Vector3d(0, 0, 1)));
}

TEST(Rotation, DegenerateLandmarks) {
  const auto topo = Topology::with_default_landmarks(4);
  Pose p = Pose::Zero(4, 3);
  p.row(2) << -1, 0, 0;
  p.row(3) << 1, 0, 0;
  EXPECT_THROW(build_rotation(p, topo), DegenerateFrame);  // spine on root
  p.row(1) << 1, 0, 0;
  EXPECT_THROW(build_rotation(p, topo), DegenerateFrame);  // hips parallel to spine
}

TEST(Rotation, OrthonormalWithUnitDeterminant) {
  std::mt19937_64 gen(6);
  const auto topo = Topology::with_default_landmarks(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_sequence(gen, 1, 5);
    const auto R = build_rotation(s.frames[0], topo).matrix();
    EXPECT_LE((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-9);
  }
}

TEST(Align, CanonicalSequenceUnchanged) {
  std::mt19937_64 gen(7);
  auto s = random_sequence(gen, 4, 4);
  s.frames[0].row(0).setZero();
  s.frames[0].row(1) << 1, 0, 0;
  s.frames[0].row(2) << 0, 1, 0;
  s.frames[0].row(3) << 0, -1, 0;
  const auto out = align_view(s, Topology::with_default_landmarks(4));
  EXPECT_LE(max_diff(out, s), 1e-12);
}

TEST(Align, FrameZeroRootAtOriginSpineOnFirstAxis) {
  std::mt19937_64 gen(8);
  const auto out = align_view(random_sequence(gen, 5, 6), Topology::with_default_landmarks(6));
  EXPECT_LE(out.frames[0].row(0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(out.frames[0](1, 0), 0.0);
  EXPECT_NEAR(out.frames[0](1, 1), 0.0, 1e-12);
  EXPECT_NEAR(out.frames[0](1, 2), 0.0, 1e-12);
}

TEST(Align, RigidInvarianceAndIdempotence) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  const auto topo = Topology::with_default_landmarks(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_sequence(gen, 6, 8);
    const Eigen::RowVector3d c(shift(gen), shift(gen), shift(gen));
    const auto a = align_view(s, topo);
    const auto b = align_view(rigid(s, focovil::testing::random_rotation(gen), c), topo);
    EXPECT_LE(max_diff(a, b), 1e-9);
    EXPECT_LE(max_diff(align_view(a, topo), a), 1e-9);
  }
}

TEST(Align, ReflectionIsNotRemoved) {
  std::mt19937_64 gen(10);
  const auto topo = Topology::with_default_landmarks(8);
  const auto s = random_sequence(gen, 3, 8);
  const Eigen::Matrix3d mirror = Eigen::Vector3d(-1, 1, 1).asDiagonal();
  EXPECT_GT(max_diff(align_view(s, topo), align_view(rigid(s, mirror, Eigen::RowVector3d::Zero()), topo)),
            1e-3);
}

TEST(Preprocess, ProducesTargetLengthAndAligns) {
  std::mt19937_64 gen(11);
  MultiViewCorpus c;
  c.topology = Topology::with_default_landmarks(5);
  c.n_views = 2;
  for (int v = 0; v < 2; ++v) {
    auto s = random_sequence(gen, 9, 5);
    s.scene_id = 0;
    s.view_id = v;
    c.sequences.push_back(s);
  }
  const auto out = preprocess(c, {20, true});
  for (const auto& s : out.sequences) {
    EXPECT_EQ(s.length(), 20);
    EXPECT_LE(s.frames[0].row(0).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Corpus, ValidateRequiresTwoViewsPerScene) {
  std::mt19937_64 gen(12);
  MultiViewCorpus c;
  c.topology = Topology::with_default_landmarks(4);
  auto s = random_sequence(gen, 3, 4);
  c.sequences.push_back(s);
  EXPECT_THROW(c.validate(), Error);
  s.view_id = 1;
  c.sequences.push_back(s);
  EXPECT_NO_THROW(c.validate());
}
