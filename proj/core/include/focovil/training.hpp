#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "focovil/losses.hpp"
#include "focovil/model.hpp"
#include "focovil/optim.hpp"
#include "focovil/rng.hpp"
#include "focovil/skeleton.hpp"

namespace focovil::train {

/// Objective variants compared in the ablation table.
enum class Ablation {
  RawReconst,    // no view alignment, reconstruction only
  AlignReconst,  // alignment + reconstruction only
  NoG,           // multi-view contrastive loss on f_e directly (no projection net)
  NoPlus,        // contrastive loss without the positive term
  NoMinus,       // contrastive loss without the negative term
  Covil,         // multi-view contrastive loss L_c
  Full,          // focalized loss L_fc
};

/// Table order: RawReconst, AlignReconst, NoG, NoPlus, NoMinus, Covil, Full.
const std::array<Ablation, 7>& all_ablations();
std::string_view to_string(Ablation a);
std::optional<Ablation> parse_ablation(std::string_view name);

/// What an ablation changes relative to the full method.
struct VariantSettings {
  bool align = true;
  bool use_projection = true;
  loss::LossConfig loss;
};
VariantSettings settings_for(Ablation a, const loss::LossConfig& base);

struct TrainConfig {
  int batch_anchors = 64;
  int epochs = 200;
  double lr = 1e-4;
  /// Multiplicative decay applied once per epoch: epoch e uses lr * decay^e.
  double lr_decay = 0.95;
  AdamConfig adam;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  loss::LossConfig loss;
  Ablation ablation = Ablation::Full;

  void validate() const;
};

/// A training sequence. It has no class label field: representation
/// training cannot read labels.
struct TrainingSequence {
  int scene_id = 0;
  int view_id = 0;
  std::vector<skeleton::Pose> frames;
};

/// All available views of one scene, ordered by view id.
struct SceneGroup {
  int scene_id = 0;
  std::vector<TrainingSequence> views;
};

struct TrainingSet {
  std::vector<SceneGroup> scenes;
  int length = 0;
  int n_joints = 0;
};

/// Groups a preprocessed corpus by scene and strips labels. Every sequence
/// must share length and joint count; every scene needs >= 2 views.
TrainingSet make_training_set(const skeleton::MultiViewCorpus& corpus);

/// I distinct scenes drawn uniformly without replacement.
/// Throws CorpusTooSmall when the set has fewer than I scenes.
std::vector<const SceneGroup*> sample_batch(const TrainingSet& data, int I, Rng& rng);

/// One epoch's batches: the scenes shuffled, then cut into runs of I. A
/// trailing run of at least 2 scenes is kept as a smaller batch.
std::vector<std::vector<const SceneGroup*>> epoch_batches(const TrainingSet& data, int I, Rng& rng);

/// Per-epoch means over batches.
struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double contrastive = 0.0;  // value of the active contrastive term ("L_fc" column)
  double reconstruction = 0.0;
  double mean_positive_r = 0.0;
  double mean_negative_r = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Epoch log format: one JSON object per line,
///   {"epoch":1,"lr":0.0001,"L_fc":...,"L_r":...,"mean_pos_r":...,"mean_neg_r":...}
std::string epoch_record_to_json(const EpochRecord& r);

struct TrainState {
  int epochs_completed = 0;
  AdamState optimizer;
};

struct TrainResult {
  model::ModelParams params;
  std::vector<EpochRecord> log;
  TrainState state;
  /// Learning rate the next epoch would use.
  double next_lr = 0.0;
};

struct TrainHooks {
  /// Called after every epoch with the record and the current parameters.
  std::function<void(const EpochRecord&, const model::ModelParams&, const TrainState&)>
      on_epoch_end;
};

/// Loss and statistics of one forward/backward pass over a batch.
struct BatchOutcome {
  double total = 0.0;
  double contrastive = 0.0;
  double reconstruction = 0.0;
  loss::ContrastStats stats;
  bool has_contrastive_pairs = false;
};

/// Forward + backward of one batch (gradients accumulate into the
/// parameters; no optimizer step). Sequences are stacked view-major over the
/// views shared by every scene of the batch, then any remaining views.
BatchOutcome forward_backward(std::span<const SceneGroup* const> batch,
                              const model::ModelParams& params, const loss::LossConfig& cfg);

/// Trains `params` in place on `data` with the loss of
/// settings_for(cfg.ablation, cfg.loss). The model's use_projection must
/// match the variant (InvalidConfig otherwise). Epoch e (0-based) shuffles scenes with
/// an Rng seeded from (cfg.seed, e), so a run resumed from `resume` replays
/// the remaining epochs exactly. Throws NonFiniteValue naming the epoch and
/// batch when a forward value becomes non-finite.
TrainResult train(const TrainingSet& data, model::ModelParams params, const TrainConfig& cfg,
                  const TrainHooks& hooks = {}, std::optional<TrainState> resume = std::nullopt);

/// Learning rate of 0-based epoch e.
double lr_for_epoch(const TrainConfig& cfg, int epoch);

}  // namespace focovil::train
