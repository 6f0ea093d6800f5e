#include "focovil/skeleton.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "focovil/errors.hpp"

namespace focovil::skeleton {

void Topology::validate() const {
  if (n_joints < 1) throw InvalidTopology("n_joints must be positive");
  const int idx[] = {root, spine, lhip, rhip};
  for (int i = 0; i < 4; ++i) {
    if (idx[i] < 0 || idx[i] >= n_joints) {
      throw InvalidTopology("landmark index " + std::to_string(idx[i]) + " outside [0, " +
                            std::to_string(n_joints) + ")");
    }
    for (int j = 0; j < i; ++j) {
      if (idx[i] == idx[j]) throw InvalidTopology("landmark indices must be distinct");
    }
  }
}

Topology Topology::with_default_landmarks(int n_joints) {
  Topology t;
  t.n_joints = n_joints;
  t.validate();
  return t;
}

Eigen::MatrixXd ActionSequence::flattened() const {
  const int n = n_joints();
  Eigen::MatrixXd out(length(), 3 * n);
  for (int t = 0; t < length(); ++t) {
    for (int j = 0; j < n; ++j) {
      for (int a = 0; a < 3; ++a) out(t, 3 * j + a) = frames[t](j, a);
    }
  }
  return out;
}

void MultiViewCorpus::validate() const {
  topology.validate();
  std::map<int, std::set<int>> views_by_scene;
  for (const auto& seq : sequences) {
    if (seq.length() < 2) {
      throw SequenceTooShort("scene " + std::to_string(seq.scene_id) + " view " +
                             std::to_string(seq.view_id) + " has fewer than 2 frames");
    }
    for (const auto& f : seq.frames) {
      if (f.rows() != topology.n_joints) {
        throw InvalidConfig("sequence joint count differs from corpus topology");
      }
      if (!f.allFinite()) throw NonFiniteValue("corpus contains non-finite coordinates");
    }
    views_by_scene[seq.scene_id].insert(seq.view_id);
  }
  for (const auto& [scene, views] : views_by_scene) {
    if (views.size() < 2) {
      throw InvalidConfig("scene " + std::to_string(scene) +
                          " is present under fewer than 2 distinct views");
    }
  }
}

ActionSequence normalize_coordinates(const ActionSequence& seq) {
  if (seq.frames.empty()) throw SequenceTooShort("empty sequence");
  Eigen::RowVector3d lo = seq.frames.front().colwise().minCoeff();
  Eigen::RowVector3d hi = seq.frames.front().colwise().maxCoeff();
  for (const auto& f : seq.frames) {
    lo = lo.cwiseMin(f.colwise().minCoeff());
    hi = hi.cwiseMax(f.colwise().maxCoeff());
  }
  const Eigen::RowVector3d mid = 0.5 * (lo + hi);
  double extent = 0.0;
  for (const auto& f : seq.frames) {
    extent = std::max(extent, (f.rowwise() - mid).cwiseAbs().maxCoeff());
  }
  if (!(extent > 0.0)) throw ZeroExtentSequence("all coordinates are identical");

  ActionSequence out = seq;
  for (auto& f : out.frames) {
    f = (f.rowwise() - mid) / extent;
    // Guard the bound against the last-ulp rounding of the division.
    f = f.cwiseMax(-1.0).cwiseMin(1.0);
  }
  return out;
}

ActionSequence resample(const ActionSequence& seq, int target_len) {
  const int T = seq.length();
  if (T < 2) throw SequenceTooShort("need at least 2 frames, got " + std::to_string(T));
  if (target_len < 2) {
    throw SequenceTooShort("target length must be at least 2, got " + std::to_string(target_len));
  }
  ActionSequence out = seq;
  out.frames.clear();
  out.frames.reserve(target_len);
  for (int k = 0; k < target_len; ++k) {
    const double s = static_cast<double>(k) * (T - 1) / (target_len - 1);
    const int i0 = std::min(static_cast<int>(std::floor(s)), T - 1);
    const double frac = s - i0;
    if (frac == 0.0) {
      out.frames.push_back(seq.frames[i0]);
    } else {
      out.frames.push_back((1.0 - frac) * seq.frames[i0] + frac * seq.frames[i0 + 1]);
    }
  }
  return out;
}

RotationMatrix build_rotation(const Pose& pose, const Topology& topo) {
  topo.validate();
  if (pose.rows() != topo.n_joints) throw ShapeMismatch("pose joint count differs from topology");
  const Eigen::Vector3d root = pose.row(topo.root).transpose();
  const Eigen::Vector3d r0 = pose.row(topo.spine).transpose() - root;
  const double n0 = r0.norm();
  if (n0 < kDegenerateNorm) throw DegenerateFrame("spine coincides with root");
  const Eigen::Vector3d u0 = r0 / n0;

  const Eigen::Vector3d hip = (pose.row(topo.lhip) - pose.row(topo.rhip)).transpose();
  const Eigen::Vector3d r1 = hip - hip.dot(u0) * u0;
  const double n1 = r1.norm();
  if (n1 < kDegenerateNorm) throw DegenerateFrame("hip vector is parallel to the spine");
  const Eigen::Vector3d u1 = r1 / n1;

  Eigen::Vector3d u2 = u0.cross(u1);
  u2.normalize();

  Eigen::Matrix3d m;
  m.col(0) = u0;
  m.col(1) = u1;
  m.col(2) = u2;
  return RotationMatrix(m);
}

ActionSequence align_view(const ActionSequence& seq, const Topology& topo) {
  if (seq.frames.empty()) throw SequenceTooShort("empty sequence");
  const RotationMatrix rot = build_rotation(seq.frames.front(), topo);
  const Eigen::RowVector3d origin = seq.frames.front().row(topo.root);
  // Row-vector form of x' = R^T (x - origin).
  ActionSequence out = seq;
  for (auto& f : out.frames) f = (f.rowwise() - origin) * rot.matrix();
  return out;
}

ActionSequence preprocess(const ActionSequence& seq, const Topology& topo,
                          const PreprocessOptions& opts) {
  ActionSequence out = resample(normalize_coordinates(seq), opts.target_len);
  if (opts.align) out = align_view(out, topo);
  return out;
}

MultiViewCorpus preprocess(const MultiViewCorpus& corpus, const PreprocessOptions& opts) {
  MultiViewCorpus out;
  out.n_views = corpus.n_views;
  out.topology = corpus.topology;
  out.sequences.reserve(corpus.sequences.size());
  for (const auto& seq : corpus.sequences) {
    out.sequences.push_back(preprocess(seq, corpus.topology, opts));
  }
  return out;
}

}  // namespace focovil::skeleton
