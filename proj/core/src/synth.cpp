#include "focovil/synth.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "focovil/errors.hpp"
#include "focovil/rng.hpp"

namespace focovil::synth {
namespace {

// Stream ids for derive_seed. Scenes use their own index as the stream.
constexpr std::uint64_t kSharedStream = 0x5A1E000000000001ULL;
constexpr std::uint64_t kClassStream = 0x5A1E000000010000ULL;
constexpr std::uint64_t kViewStream = 0x5A1E000000020000ULL;
constexpr std::uint64_t kNoiseStream = 0x5A1E000100000000ULL;

struct JointSpec {
  double x, y, z;
  double mobility;
};

// Kinect-like layout, y up, actor facing -z before the facing yaw.
constexpr std::array<JointSpec, 16> kSkeleton = {{
    {0.00, 1.00, 0.0, 0.02},   // root
    {0.00, 1.30, 0.0, 0.03},   // spine
    {0.12, 0.95, 0.0, 0.02},   // left hip
    {-0.12, 0.95, 0.0, 0.02},  // right hip
    {0.00, 1.55, 0.0, 0.05},   // neck
    {0.00, 1.72, 0.0, 0.07},   // head
    {0.20, 1.50, 0.0, 0.06},   // left shoulder
    {-0.20, 1.50, 0.0, 0.06},  // right shoulder
    {0.26, 1.25, 0.0, 0.20},   // left elbow
    {-0.26, 1.25, 0.0, 0.20},  // right elbow
    {0.28, 1.00, 0.0, 0.35},   // left hand
    {-0.28, 1.00, 0.0, 0.35},  // right hand
    {0.12, 0.52, 0.0, 0.15},   // left knee
    {-0.12, 0.52, 0.0, 0.15},  // right knee
    {0.12, 0.06, 0.0, 0.25},   // left foot
    {-0.12, 0.06, 0.0, 0.25},  // right foot
}};

const JointSpec& joint_spec(int j) { return kSkeleton[static_cast<std::size_t>(j) % kSkeleton.size()]; }

// Per-joint, per-axis sinusoid a * sin(2*pi*f*s + phase), s in [0, 1].
struct MotionComponent {
  double frequency = 1.0;
  Eigen::MatrixXd amplitude;  // n_joints x 3
  Eigen::MatrixXd phase;      // n_joints x 3
};

MotionComponent random_component(Rng& rng, int n_joints, double f_lo, double f_hi) {
  MotionComponent c;
  c.frequency = rng.uniform(f_lo, f_hi);
  c.amplitude.resize(n_joints, 3);
  c.phase.resize(n_joints, 3);
  for (int j = 0; j < n_joints; ++j) {
    for (int a = 0; a < 3; ++a) {
      c.amplitude(j, a) = joint_spec(j).mobility * rng.uniform(0.3, 1.0);
      c.phase(j, a) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }
  return c;
}

MotionComponent jittered(const MotionComponent& base, Rng& rng, double jitter) {
  MotionComponent c = base;
  c.frequency *= 1.0 + 0.1 * jitter * rng.normal();
  for (int j = 0; j < c.amplitude.rows(); ++j) {
    for (int a = 0; a < 3; ++a) {
      c.amplitude(j, a) *= std::max(0.0, 1.0 + jitter * rng.normal());
      c.phase(j, a) += jitter * rng.normal();
    }
  }
  return c;
}

void add_component(skeleton::Pose& pose, const MotionComponent& c, double s, double gain) {
  for (int j = 0; j < pose.rows(); ++j) {
    for (int a = 0; a < 3; ++a) {
      pose(j, a) += gain * c.amplitude(j, a) *
                    std::sin(2.0 * std::numbers::pi * c.frequency * s + c.phase(j, a));
    }
  }
}

Eigen::Matrix3d yaw(double degrees) {
  return Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, Eigen::Vector3d::UnitY())
      .toRotationMatrix();
}

}  // namespace

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidConfig(what); };
  if (n_classes < 1) fail("n_classes must be >= 1");
  if (scenes_per_class < 1) fail("scenes_per_class must be >= 1");
  if (n_views < 2) fail("n_views must be >= 2");
  if (n_joints < 4) fail("n_joints must be >= 4");
  if (seq_len < 2) fail("seq_len must be >= 2");
  if (!view_azimuths_deg.empty() && static_cast<int>(view_azimuths_deg.size()) != n_views) {
    fail("view_azimuths_deg must list one angle per view");
  }
  if (!(occlusion_noise_std >= 0.0) || !std::isfinite(occlusion_noise_std)) {
    fail("occlusion_noise_std must be finite and >= 0");
  }
  if (!(view_offset_scale >= 0.0)) fail("view_offset_scale must be >= 0");
  if (!(facing_yaw_range_deg >= 0.0)) fail("facing_yaw_range_deg must be >= 0");
  if (occluded_joints_per_view < 0 || occluded_joints_per_view > n_joints) {
    fail("occluded_joints_per_view must lie in [0, n_joints]");
  }
  if (!(scene_jitter >= 0.0)) fail("scene_jitter must be >= 0");
  if (!(class_separation >= 0.0)) fail("class_separation must be >= 0");
}

std::vector<double> GeneratorConfig::azimuths() const {
  if (!view_azimuths_deg.empty()) return view_azimuths_deg;
  std::vector<double> out(n_views);
  for (int v = 0; v < n_views; ++v) out[v] = -60.0 + 120.0 * v / (n_views - 1);
  return out;
}

int GeneratorConfig::occluded_count() const {
  return occluded_joints_per_view > 0 ? occluded_joints_per_view : std::max(1, n_joints / 4);
}

skeleton::Pose rest_pose(int n_joints) {
  skeleton::Pose pose(n_joints, 3);
  for (int j = 0; j < n_joints; ++j) {
    const auto& s = joint_spec(j);
    const double lift = 0.03 * static_cast<double>(j / static_cast<int>(kSkeleton.size()));
    pose.row(j) << s.x, s.y + lift, s.z;
  }
  return pose;
}

std::vector<int> occluded_joints(const GeneratorConfig& cfg, int view) {
  Rng rng(derive_seed(cfg.rng_seed, kViewStream + 2 * static_cast<std::uint64_t>(view) + 1));
  std::vector<int> joints(cfg.n_joints);
  std::iota(joints.begin(), joints.end(), 0);
  rng.shuffle(std::span<int>(joints));
  joints.resize(cfg.occluded_count());
  std::sort(joints.begin(), joints.end());
  return joints;
}

skeleton::MultiViewCorpus generate_corpus(const GeneratorConfig& cfg) {
  cfg.validate();
  const int n = cfg.n_joints;
  const int T = cfg.seq_len;

  Rng shared_rng(derive_seed(cfg.rng_seed, kSharedStream));
  const MotionComponent shared = random_component(shared_rng, n, 0.8, 1.6);

  std::vector<MotionComponent> templates;
  templates.reserve(cfg.n_classes);
  for (int c = 0; c < cfg.n_classes; ++c) {
    Rng rng(derive_seed(cfg.rng_seed, kClassStream + static_cast<std::uint64_t>(c)));
    templates.push_back(random_component(rng, n, 1.0, 2.5));
  }

  const auto az = cfg.azimuths();
  std::vector<Eigen::Matrix3d> view_rot(cfg.n_views);
  std::vector<Eigen::RowVector3d> view_offset(cfg.n_views);
  std::vector<std::vector<int>> occluded(cfg.n_views);
  for (int v = 0; v < cfg.n_views; ++v) {
    Rng rng(derive_seed(cfg.rng_seed, kViewStream + 2 * static_cast<std::uint64_t>(v)));
    view_rot[v] = yaw(az[v]);
    view_offset[v] << rng.uniform(-2.0, 2.0), rng.uniform(-0.5, 0.5), rng.uniform(2.0, 4.0);
    view_offset[v] *= cfg.view_offset_scale;
    occluded[v] = occluded_joints(cfg, v);
  }

  const skeleton::Pose rest = rest_pose(n);
  skeleton::MultiViewCorpus corpus;
  corpus.n_views = cfg.n_views;
  corpus.topology = skeleton::Topology::with_default_landmarks(n);
  corpus.sequences.reserve(static_cast<std::size_t>(cfg.n_classes) * cfg.scenes_per_class *
                           cfg.n_views);

  for (int c = 0; c < cfg.n_classes; ++c) {
    for (int s = 0; s < cfg.scenes_per_class; ++s) {
      const int scene_id = c * cfg.scenes_per_class + s;
      Rng rng(derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(scene_id)));
      const MotionComponent shared_s = jittered(shared, rng, cfg.scene_jitter);
      const MotionComponent class_s = jittered(templates[c], rng, cfg.scene_jitter);
      const double body_scale = 1.0 + 0.08 * rng.normal();
      const Eigen::Matrix3d facing =
          yaw(rng.uniform(-cfg.facing_yaw_range_deg, cfg.facing_yaw_range_deg));
      Eigen::RowVector3d position;
      position << rng.uniform(-0.5, 0.5), 0.0, rng.uniform(-0.5, 0.5);

      // World-frame motion, shared by every view of the scene.
      std::vector<skeleton::Pose> world(T);
      for (int t = 0; t < T; ++t) {
        const double phase = static_cast<double>(t) / (T - 1);
        skeleton::Pose p = rest;
        add_component(p, shared_s, phase, 1.0);
        add_component(p, class_s, phase, cfg.class_separation);
        world[t] = ((body_scale * p) * facing.transpose()).rowwise() + position;
      }

      for (int v = 0; v < cfg.n_views; ++v) {
        Rng noise(derive_seed(cfg.rng_seed,
                              kNoiseStream + static_cast<std::uint64_t>(scene_id) * 64 + v));
        skeleton::ActionSequence seq;
        seq.scene_id = scene_id;
        seq.view_id = v;
        seq.class_label = c;
        seq.frames.reserve(T);
        for (int t = 0; t < T; ++t) {
          skeleton::Pose p = (world[t] * view_rot[v].transpose()).rowwise() + view_offset[v];
          if (cfg.occlusion_noise_std > 0.0) {
            for (int j : occluded[v]) {
              for (int a = 0; a < 3; ++a) p(j, a) += cfg.occlusion_noise_std * noise.normal();
            }
          }
          seq.frames.push_back(std::move(p));
        }
        corpus.sequences.push_back(std::move(seq));
      }
    }
  }
  return corpus;
}

}  // namespace focovil::synth
