#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "focovil/evaluation.hpp"
#include "focovil/model.hpp"
#include "focovil/skeleton.hpp"
#include "focovil/training.hpp"

namespace focovil::ablation {

struct AblationConfig {
  /// use_projection and seed are set per run.
  model::ModelConfig model;
  /// ablation and seed are set per run.
  train::TrainConfig train;
  /// align is set per variant.
  skeleton::PreprocessOptions preprocess;
  eval::Split split;
  std::vector<train::Ablation> variants{train::all_ablations().begin(),
                                        train::all_ablations().end()};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  /// Worker threads for independent runs; 0 uses the hardware count.
  int threads = 1;

  void validate() const;
};

struct RunResult {
  train::Ablation variant = train::Ablation::Full;
  std::uint64_t seed = 0;
  double one_nn_accuracy = 0.0;
  double gmm_purity = 0.0;
};

struct VariantMean {
  train::Ablation variant = train::Ablation::Full;
  double one_nn_accuracy = 0.0;
  double gmm_purity = 0.0;
};

/// full >= covil >= align_reconst >= raw_reconst on both metrics, with
/// full - align_reconst >= 3 and full - raw_reconst >= 8 accuracy points.
struct TrendCheck {
  bool evaluated = false;  // false unless all four variants ran
  bool accuracy_ordered = false;
  bool purity_ordered = false;
  double full_minus_align_points = 0.0;
  double full_minus_raw_points = 0.0;
  bool gaps_met = false;

  bool passed() const { return evaluated && accuracy_ordered && purity_ordered && gaps_met; }
};

struct AblationTable {
  /// Variant-major in the requested order, then seeds in order.
  std::vector<RunResult> runs;
  std::vector<VariantMean> means;
  TrendCheck trend;
};

/// Called after each finished run (from the worker thread that ran it).
using RunCallback = std::function<void(const RunResult&)>;

/// Trains every variant x seed on the training side of the split (labels
/// never reach training) and scores 1-NN accuracy and GMM purity on the
/// held-out side. `corpus` is raw: each variant preprocesses it itself.
AblationTable run_ablation(const skeleton::MultiViewCorpus& corpus, const AblationConfig& cfg,
                           const RunCallback& on_run = {});

/// Scores one variant/seed; the unit of work run_ablation schedules.
RunResult run_variant(const skeleton::MultiViewCorpus& corpus, const AblationConfig& cfg,
                      train::Ablation variant, std::uint64_t seed);

TrendCheck check_trend(const std::vector<VariantMean>& means);

/// CSV: "variant,seed,one_nn_accuracy,gmm_purity" rows, one mean row per
/// variant (seed column "mean"), then "# trend ..." summary lines.
std::string table_to_csv(const AblationTable& t);

}  // namespace focovil::ablation
