#pragma once

#include <filesystem>
#include <string>

#include "focovil/ablation.hpp"
#include "focovil/evaluation.hpp"
#include "focovil/model.hpp"
#include "focovil/skeleton.hpp"
#include "focovil/synth.hpp"
#include "focovil/training.hpp"

namespace focovil::cli {

/// Everything one command needs, resolved from a JSON config document.
///
/// Schema (every section and key optional unless a command requires the
/// section; unknown keys are errors):
///   generator:  n_classes, scenes_per_class, n_views, n_joints, seq_len,
///               view_azimuths_deg, occlusion_noise_std, rng_seed,
///               view_offset_scale, facing_yaw_range_deg,
///               occluded_joints_per_view, scene_jitter, class_separation
///   skeleton:   root, spine, lhip, rhip        (landmark joint indices)
///   preprocess: target_len
///   model:      hidden, layers, projection_mid, decoder_hidden, seed
///   loss:       tau, alpha, beta, stop_grad_weights
///   train:      batch_anchors, epochs, lr, lr_decay, adam_beta1, adam_beta2,
///               adam_eps, clip_norm, seed, ablation
///   eval:       split, probe_lr, probe_epochs, cluster_seed, n_clusters
///   ablation:   variants, seeds, threads
///
/// model.input_dim, model.use_projection and preprocess.align are not
/// configurable: they follow from the data and the ablation variant.
struct RunConfig {
  synth::GeneratorConfig generator;
  skeleton::Topology landmarks = skeleton::Topology::with_default_landmarks(4);
  skeleton::PreprocessOptions preprocess;
  model::ModelConfig model;
  train::TrainConfig train;
  eval::EvalConfig eval;
  std::vector<train::Ablation> ablation_variants{train::all_ablations().begin(),
                                                 train::all_ablations().end()};
  std::vector<std::uint64_t> ablation_seeds{1, 2, 3};
  int ablation_threads = 1;

  /// Topology for n_joints with the configured landmarks.
  skeleton::Topology topology(int n_joints) const;
  /// Ablation settings with the variant/seed lists filled in.
  ablation::AblationConfig ablation_config() const;
};

/// Throws InvalidConfig naming the offending key (e.g. "train.lr") for an
/// unknown key, a wrong type, a missing required section, or a violated
/// invariant. ParseError when the text is not JSON.
RunConfig parse_run_config(const std::string& text,
                           std::initializer_list<const char*> required_sections = {});
RunConfig load_run_config(const std::filesystem::path& path,
                          std::initializer_list<const char*> required_sections = {});

/// Every resolved field, pretty-printed. Parsing the output reproduces the
/// same RunConfig.
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace focovil::cli
