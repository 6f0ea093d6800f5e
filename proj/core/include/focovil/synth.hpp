#pragma once

#include <cstdint>
#include <vector>

#include "focovil/skeleton.hpp"

namespace focovil::synth {

/// Parameters of the synthetic multi-view corpus.
struct GeneratorConfig {
  int n_classes = 5;
  int scenes_per_class = 60;
  int n_views = 3;
  int n_joints = 16;
  int seq_len = 50;
  /// One azimuth per view; empty means evenly spaced over [-60, 60] degrees.
  std::vector<double> view_azimuths_deg;
  double occlusion_noise_std = 0.3;
  std::uint64_t rng_seed = 7;

  /// Multiplier on the random per-view camera translation (0 disables it).
  double view_offset_scale = 1.0;
  /// Each scene's actor faces a random yaw in [-range, range] degrees.
  double facing_yaw_range_deg = 45.0;
  /// Number of joints whose coordinates are corrupted under each view;
  /// 0 means n_joints / 4 (at least 1).
  int occluded_joints_per_view = 0;
  /// Relative per-scene jitter of the class motion template.
  double scene_jitter = 0.5;
  /// Scale of the class-specific part of the motion template relative to the
  /// motion shared by all classes. Smaller values make classes more alike.
  double class_separation = 0.5;

  /// Throws InvalidConfig for violated preconditions.
  void validate() const;
  std::vector<double> azimuths() const;
  int occluded_count() const;
};

/// Deterministic labeled corpus: n_classes * scenes_per_class scenes, each
/// rendered under every view. scene_id = class * scenes_per_class + index,
/// sequences ordered by scene then view.
skeleton::MultiViewCorpus generate_corpus(const GeneratorConfig& cfg);

/// Joints corrupted under the given view.
std::vector<int> occluded_joints(const GeneratorConfig& cfg, int view);

/// Canonical rest pose the motion templates are built around (y is up).
skeleton::Pose rest_pose(int n_joints);

}  // namespace focovil::synth
