#pragma once

#include <optional>
#include <span>
#include <vector>

#include "focovil/tensor.hpp"

namespace focovil::loss {

/// Which pair terms the contrastive objective keeps (ablations).
enum class PairTerms {
  Both,
  /// Drop the positive numerator: only the negative log-sum-exp remains.
  NegativesOnly,
  /// Drop the negative denominator: only the positive similarity remains.
  PositivesOnly,
};

struct LossConfig {
  double tau = 0.5;
  double alpha = 1.0;
  double beta = 1.0;
  /// Focal weights on (L_fc); plain multi-view contrastive loss (L_c) when off.
  bool focalize = true;
  /// Treat the focal weights as constants during backpropagation.
  bool stop_grad_weights = false;
  PairTerms pairs = PairTerms::Both;

  void validate() const;
};

/// Projected embeddings of I scenes under several views. views[k] is I x d and
/// row i of every view belongs to scene_ids[i]. Every view serves as the
/// anchor view in turn; every other view supplies its positives.
struct ContrastiveBatch {
  std::vector<ad::Tensor> views;
  std::vector<int> view_ids;
  std::vector<int> scene_ids;

  int anchors_per_view() const { return views.empty() ? 0 : static_cast<int>(views[0].rows()); }
  /// Throws BatchTooSmall when I < 2 and ShapeMismatch for inconsistent views.
  void validate() const;
};

/// a.b / (max(|a|, eps) * max(|b|, eps)).
double cosine_r(std::span<const double> a, std::span<const double> b);
/// exp(cosine_r(a, b) / tau).
double similarity_S(std::span<const double> a, std::span<const double> b, double tau);

/// Pairwise cosine matrix between the rows of a and b, on the tape.
ad::Tensor cosine_matrix(const ad::Tensor& a, const ad::Tensor& b);

/// Focal weights for one (anchor view, positive view) pair, one row per anchor.
struct PairWeights {
  int anchor_view = 0;  // index into ContrastiveBatch::views
  int other_view = 0;
  ad::Tensor w_plus;   // I x 1: s(1 - r(a_i^u, a_i^v))
  ad::Tensor w_minus;  // I x 1: s(mean over j != i of (1 + r(a_i^u, a_j^u)) and (1 + r(a_i^u, a_j^v)))
};

/// Weights for every ordered view pair, detached when cfg.stop_grad_weights.
std::vector<PairWeights> focal_weights(const ContrastiveBatch& batch, const LossConfig& cfg);

/// Replaces the computed focal weights by constants (used to check that the
/// focalized loss reduces to L_c at w+ = w- = 1).
struct WeightOverride {
  double w_plus = 1.0;
  double w_minus = 1.0;
};

/// Multi-view contrastive loss. For anchor i under view u and each v != u:
///   -log( S(a_i^u, a_i^v) / sum_{j != i} [S(a_i^u, a_j^u) + S(a_i^u, a_j^v)] ),
/// summed over v and averaged over all anchors (every row of every view).
/// The denominator is evaluated with log-sum-exp.
ad::Tensor contrastive_loss_Lc(const ContrastiveBatch& batch, const LossConfig& cfg);

/// Focalized loss: per anchor and v,
///   -[ w+ log S(a_i^u, a_i^v) - w- log sum_{j != i}(...) ],
/// with the same reduction as contrastive_loss_Lc.
ad::Tensor focalized_loss_Lfc(const ContrastiveBatch& batch, const LossConfig& cfg,
                              std::optional<WeightOverride> override_weights = std::nullopt);

/// Focalized loss with the weights held at the given constants (in
/// focal_weights order). Its gradient is what stop_grad_weights trains with.
ad::Tensor focalized_loss_Lfc(const ContrastiveBatch& batch, const LossConfig& cfg,
                              std::span<const PairWeights> fixed_weights);

/// The contrastive term selected by cfg (focalize and pairs).
ad::Tensor contrastive_term(const ContrastiveBatch& batch, const LossConfig& cfg);

/// (1/T) sum_t |pred_t - target_t|_2 for T x 3N tensors.
ad::Tensor reconstruction_loss_Lr(const ad::Tensor& pred, const ad::Tensor& target);
/// Batched form over time-major steps (each B x 3N): the mean of the
/// per-sequence losses.
ad::Tensor reconstruction_loss_Lr(std::span<const ad::Tensor> pred,
                                  std::span<const ad::Tensor> target);

struct ObjectiveTerms {
  ad::Tensor total;
  /// Contrastive value (0 when alpha == 0: the term is not evaluated).
  ad::Tensor contrastive;
  ad::Tensor reconstruction;
};

/// alpha * contrastive_term + beta * L_r.
ObjectiveTerms total_objective(const ContrastiveBatch& batch, std::span<const ad::Tensor> pred,
                               std::span<const ad::Tensor> target, const LossConfig& cfg);

/// Mean cosine of positive pairs (same scene, different view) and of
/// negative pairs (different scenes, any views) in a batch.
struct ContrastStats {
  double mean_positive_r = 0.0;
  double mean_negative_r = 0.0;
};
ContrastStats contrast_stats(const ContrastiveBatch& batch);

}  // namespace focovil::loss
