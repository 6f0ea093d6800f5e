#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

namespace focovil::skeleton {

/// Joint count plus the four landmark joints that define the body frame.
struct Topology {
  int n_joints = 0;
  int root = 0;
  int spine = 1;
  int lhip = 2;
  int rhip = 3;

  /// Throws InvalidTopology unless the landmarks are distinct and < n_joints.
  void validate() const;

  /// Landmarks at joints 0..3 (root, spine, left hip, right hip).
  static Topology with_default_landmarks(int n_joints);

  friend bool operator==(const Topology&, const Topology&) = default;
};

/// One pose: a row per joint, columns x, y, z.
using Pose = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct ActionSequence {
  std::vector<Pose> frames;
  int scene_id = 0;
  int view_id = 0;
  /// Evaluation-only. Representation training never reads it.
  std::optional<int> class_label;

  int length() const { return static_cast<int>(frames.size()); }
  int n_joints() const { return frames.empty() ? 0 : static_cast<int>(frames.front().rows()); }

  /// Frames flattened to a T x 3N row-major matrix (joint-major within a row).
  Eigen::MatrixXd flattened() const;
};

struct MultiViewCorpus {
  std::vector<ActionSequence> sequences;
  int n_views = 0;
  Topology topology;

  /// Checks shared joint count, finite coordinates, length >= 2, and that
  /// every scene is present under at least two distinct views.
  void validate() const;
};

/// Proper rotation whose columns are the body-frame axes.
class RotationMatrix {
 public:
  RotationMatrix() : m_(Eigen::Matrix3d::Identity()) {}
  explicit RotationMatrix(const Eigen::Matrix3d& m) : m_(m) {}

  const Eigen::Matrix3d& matrix() const { return m_; }
  Eigen::Vector3d column(int i) const { return m_.col(i); }
  /// R^-1 = R^T for an orthonormal matrix.
  Eigen::Matrix3d inverse() const { return m_.transpose(); }

 private:
  Eigen::Matrix3d m_;
};

/// Norm below which a landmark vector counts as degenerate.
inline constexpr double kDegenerateNorm = 1e-9;

/// Subtracts the per-axis coordinate midrange of the whole sequence, then
/// divides every coordinate by one common factor (the largest absolute
/// centered coordinate), so the output spans [-1, 1] with geometry intact.
ActionSequence normalize_coordinates(const ActionSequence& seq);

/// Linear interpolation to target_len frames. Output frame k samples source
/// time k*(T-1)/(target_len-1); endpoints are copied exactly.
ActionSequence resample(const ActionSequence& seq, int target_len);

/// Body frame from the landmarks of one pose:
///   r0 = spine - root, r1 = (lhip - rhip) with its r0-component removed,
///   r2 = r0 x r1, each column normalized.
RotationMatrix build_rotation(const Pose& pose, const Topology& topo);

/// Translates every joint by -root(frame 0) and rotates by R^T, with R from
/// build_rotation on frame 0.
ActionSequence align_view(const ActionSequence& seq, const Topology& topo);

struct PreprocessOptions {
  int target_len = 50;
  bool align = true;
};

/// normalize -> resample -> align (alignment optional).
ActionSequence preprocess(const ActionSequence& seq, const Topology& topo,
                          const PreprocessOptions& opts);
MultiViewCorpus preprocess(const MultiViewCorpus& corpus, const PreprocessOptions& opts);

}  // namespace focovil::skeleton
