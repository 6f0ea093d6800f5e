#include "focovil/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "focovil/errors.hpp"

namespace focovil::loss {

using ad::Axis;
using ad::Matrix;
using ad::Tensor;

namespace {

Tensor normalize_rows(const Tensor& a) {
  return ad::div(a, ad::clamp_min(ad::l2_norm(a), ad::kEpsilon));
}

// Excludes column i and column I + i from row i of an I x 2I block.
Matrix negative_mask(Eigen::Index I) {
  Matrix mask = Matrix::Ones(I, 2 * I);
  for (Eigen::Index i = 0; i < I; ++i) {
    mask(i, i) = 0.0;
    mask(i, I + i) = 0.0;
  }
  return mask;
}

// Per ordered view pair: the anchor-to-positive cosine (I x 1) and the
// anchor-to-negative cosine block [R_uu | R_uv] (I x 2I).
struct PairGeometry {
  int u = 0;
  int v = 0;
  Tensor positive;
  Tensor block;
};

std::vector<PairGeometry> pair_geometry(const ContrastiveBatch& batch) {
  batch.validate();
  const auto I = static_cast<Eigen::Index>(batch.anchors_per_view());
  std::vector<Tensor> unit;
  unit.reserve(batch.views.size());
  for (const auto& v : batch.views) unit.push_back(normalize_rows(v));
  const Tensor eye = Tensor::constant(Matrix::Identity(I, I));

  std::vector<PairGeometry> out;
  const int V = static_cast<int>(batch.views.size());
  for (int u = 0; u < V; ++u) {
    const Tensor r_uu = ad::matmul(unit[u], ad::transpose(unit[u]));
    for (int v = 0; v < V; ++v) {
      if (v == u) continue;
      const Tensor r_uv = ad::matmul(unit[u], ad::transpose(unit[v]));
      PairGeometry g;
      g.u = u;
      g.v = v;
      g.positive = ad::sum(ad::mul(r_uv, eye), Axis::Cols);
      g.block = ad::concat({r_uu, r_uv}, Axis::Cols);
      out.push_back(std::move(g));
    }
  }
  return out;
}

PairWeights weights_for(const PairGeometry& g, const Matrix& mask, Eigen::Index I,
                        bool stop_grad) {
  PairWeights w;
  w.anchor_view = g.u;
  w.other_view = g.v;
  w.w_plus = ad::sigmoid(ad::add_scalar(-g.positive, 1.0));
  const Tensor neg_mean = ad::scale(ad::sum(ad::mul(g.block, Tensor::constant(mask)), Axis::Cols),
                                    1.0 / static_cast<double>(2 * I - 2));
  w.w_minus = ad::sigmoid(ad::add_scalar(neg_mean, 1.0));
  if (stop_grad) {
    w.w_plus = w.w_plus.detach();
    w.w_minus = w.w_minus.detach();
  }
  return w;
}

enum class Weighting { Unit, Focal };

Tensor contrastive_impl(const ContrastiveBatch& batch, const LossConfig& cfg, Weighting weighting,
                        std::optional<WeightOverride> forced,
                        std::span<const PairWeights> fixed = {}) {
  cfg.validate();
  const auto geometry = pair_geometry(batch);
  const auto I = static_cast<Eigen::Index>(batch.anchors_per_view());
  const Matrix mask = negative_mask(I);
  const double inv_tau = 1.0 / cfg.tau;

  if (!fixed.empty() && fixed.size() != geometry.size()) {
    throw ShapeMismatch("expected focal weights for " + std::to_string(geometry.size()) +
                        " view pairs, got " + std::to_string(fixed.size()));
  }
  std::vector<Tensor> terms;
  terms.reserve(geometry.size());
  for (std::size_t k = 0; k < geometry.size(); ++k) {
    const auto& g = geometry[k];
    // log S(a_i^u, a_i^v) = r / tau
    const Tensor log_pos = ad::scale(g.positive, inv_tau);
    const Tensor log_den = ad::logsumexp(ad::scale(g.block, inv_tau), mask);
    Tensor pos_part = log_pos;
    Tensor neg_part = log_den;
    if (weighting == Weighting::Focal) {
      if (forced) {
        pos_part = ad::scale(log_pos, forced->w_plus);
        neg_part = ad::scale(log_den, forced->w_minus);
      } else if (!fixed.empty()) {
        const auto& w = fixed[k];
        if (w.w_plus.rows() != I || w.w_minus.rows() != I) {
          throw ShapeMismatch("focal weights do not match the anchor count");
        }
        pos_part = ad::mul(w.w_plus.detach(), log_pos);
        neg_part = ad::mul(w.w_minus.detach(), log_den);
      } else {
        const PairWeights w = weights_for(g, mask, I, cfg.stop_grad_weights);
        pos_part = ad::mul(w.w_plus, log_pos);
        neg_part = ad::mul(w.w_minus, log_den);
      }
    }
    switch (cfg.pairs) {
      case PairTerms::Both:
        terms.push_back(neg_part - pos_part);
        break;
      case PairTerms::NegativesOnly:
        terms.push_back(neg_part);
        break;
      case PairTerms::PositivesOnly:
        terms.push_back(-pos_part);
        break;
    }
  }
  // Summed over positive views per anchor, averaged over all anchors.
  const double n_anchors = static_cast<double>(I) * static_cast<double>(batch.views.size());
  return ad::scale(ad::sum(ad::concat(terms, Axis::Rows)), 1.0 / n_anchors);
}

}  // namespace

void LossConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidConfig("loss.tau must be positive");
  if (!(alpha >= 0.0)) throw InvalidConfig("loss.alpha must be >= 0");
  if (!(beta >= 0.0)) throw InvalidConfig("loss.beta must be >= 0");
}

void ContrastiveBatch::validate() const {
  if (views.size() < 2) throw BatchTooSmall("need at least two views per batch");
  const auto I = views[0].rows();
  if (I < 2) throw BatchTooSmall("need at least 2 anchors, got " + std::to_string(I));
  for (const auto& v : views) {
    if (v.shape() != views[0].shape()) {
      throw ShapeMismatch("contrastive views differ in shape: " + v.shape().str() + " vs " +
                          views[0].shape().str());
    }
  }
  if (!scene_ids.empty() && static_cast<Eigen::Index>(scene_ids.size()) != I) {
    throw ShapeMismatch("scene_ids length differs from anchor count");
  }
  if (!view_ids.empty() && view_ids.size() != views.size()) {
    throw ShapeMismatch("view_ids length differs from view count");
  }
}

double cosine_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("cosine_r: vector lengths differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::max(std::sqrt(na), ad::kEpsilon) * std::max(std::sqrt(nb), ad::kEpsilon));
}

double similarity_S(std::span<const double> a, std::span<const double> b, double tau) {
  if (!(tau > 0.0)) throw InvalidConfig("tau must be positive");
  return std::exp(cosine_r(a, b) / tau);
}

Tensor cosine_matrix(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw ShapeMismatch("cosine_matrix: embedding widths differ");
  return ad::matmul(normalize_rows(a), ad::transpose(normalize_rows(b)));
}

std::vector<PairWeights> focal_weights(const ContrastiveBatch& batch, const LossConfig& cfg) {
  const auto geometry = pair_geometry(batch);
  const auto I = static_cast<Eigen::Index>(batch.anchors_per_view());
  const Matrix mask = negative_mask(I);
  std::vector<PairWeights> out;
  out.reserve(geometry.size());
  for (const auto& g : geometry) out.push_back(weights_for(g, mask, I, cfg.stop_grad_weights));
  return out;
}

Tensor contrastive_loss_Lc(const ContrastiveBatch& batch, const LossConfig& cfg) {
  LossConfig plain = cfg;
  plain.pairs = PairTerms::Both;
  return contrastive_impl(batch, plain, Weighting::Unit, std::nullopt);
}

Tensor focalized_loss_Lfc(const ContrastiveBatch& batch, const LossConfig& cfg,
                          std::optional<WeightOverride> override_weights) {
  LossConfig plain = cfg;
  plain.pairs = PairTerms::Both;
  return contrastive_impl(batch, plain, Weighting::Focal, override_weights);
}

Tensor focalized_loss_Lfc(const ContrastiveBatch& batch, const LossConfig& cfg,
                          std::span<const PairWeights> fixed_weights) {
  LossConfig plain = cfg;
  plain.pairs = PairTerms::Both;
  return contrastive_impl(batch, plain, Weighting::Focal, std::nullopt, fixed_weights);
}

Tensor contrastive_term(const ContrastiveBatch& batch, const LossConfig& cfg) {
  return contrastive_impl(batch, cfg, cfg.focalize ? Weighting::Focal : Weighting::Unit,
                          std::nullopt);
}

Tensor reconstruction_loss_Lr(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw ShapeMismatch("reconstruction: " + pred.shape().str() + " vs " + target.shape().str());
  }
  return ad::mean(ad::l2_norm(pred - target));
}

Tensor reconstruction_loss_Lr(std::span<const Tensor> pred, std::span<const Tensor> target) {
  if (pred.size() != target.size() || pred.empty()) {
    throw ShapeMismatch("reconstruction: step counts differ (" + std::to_string(pred.size()) +
                        " vs " + std::to_string(target.size()) + ")");
  }
  std::vector<Tensor> norms;
  norms.reserve(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].shape() != target[t].shape()) {
      throw ShapeMismatch("reconstruction: " + pred[t].shape().str() + " vs " +
                          target[t].shape().str());
    }
    norms.push_back(ad::l2_norm(pred[t] - target[t]));
  }
  // Equal T for every sequence: the mean over all (t, b) is the mean of the
  // per-sequence frame averages.
  return ad::mean(ad::concat(norms, Axis::Cols));
}

ObjectiveTerms total_objective(const ContrastiveBatch& batch, std::span<const Tensor> pred,
                               std::span<const Tensor> target, const LossConfig& cfg) {
  cfg.validate();
  ObjectiveTerms out;
  out.reconstruction = reconstruction_loss_Lr(pred, target);
  out.contrastive = cfg.alpha > 0.0 ? contrastive_term(batch, cfg) : Tensor::scalar(0.0);
  out.total = ad::scale(out.contrastive, cfg.alpha) + ad::scale(out.reconstruction, cfg.beta);
  return out;
}

ContrastStats contrast_stats(const ContrastiveBatch& batch) {
  batch.validate();
  const auto I = batch.views[0].rows();
  const auto V = static_cast<Eigen::Index>(batch.views.size());
  Matrix all(I * V, batch.views[0].cols());
  for (Eigen::Index k = 0; k < V; ++k) all.middleRows(k * I, I) = batch.views[k].value();
  for (Eigen::Index r = 0; r < all.rows(); ++r) {
    all.row(r) /= std::max(all.row(r).norm(), ad::kEpsilon);
  }
  const Matrix cos = all * all.transpose();
  double pos = 0.0, neg = 0.0;
  long n_pos = 0, n_neg = 0;
  for (Eigen::Index a = 0; a < all.rows(); ++a) {
    for (Eigen::Index b = a + 1; b < all.rows(); ++b) {
      if (a % I == b % I) {
        pos += cos(a, b);
        ++n_pos;
      } else {
        neg += cos(a, b);
        ++n_neg;
      }
    }
  }
  return {n_pos ? pos / n_pos : 0.0, n_neg ? neg / n_neg : 0.0};
}

}  // namespace focovil::loss
