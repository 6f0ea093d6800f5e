#include "focovil/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

#include "focovil/errors.hpp"

namespace focovil::train {

using ad::Tensor;

namespace {

constexpr std::uint64_t kEpochStream = 0xE90C4;

constexpr std::array<Ablation, 7> kTableOrder = {
    Ablation::RawReconst, Ablation::AlignReconst, Ablation::NoG,  Ablation::NoPlus,
    Ablation::NoMinus,    Ablation::Covil,        Ablation::Full,
};

}  // namespace

const std::array<Ablation, 7>& all_ablations() { return kTableOrder; }

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::RawReconst: return "raw_reconst";
    case Ablation::AlignReconst: return "align_reconst";
    case Ablation::NoG: return "no_g";
    case Ablation::NoPlus: return "no_plus";
    case Ablation::NoMinus: return "no_minus";
    case Ablation::Covil: return "covil";
    case Ablation::Full: return "full";
  }
  return "unknown";
}

std::optional<Ablation> parse_ablation(std::string_view name) {
  for (auto a : kTableOrder) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

VariantSettings settings_for(Ablation a, const loss::LossConfig& base) {
  VariantSettings s;
  s.loss = base;
  s.loss.pairs = loss::PairTerms::Both;
  switch (a) {
    case Ablation::RawReconst:
      s.align = false;
      s.loss.alpha = 0.0;
      break;
    case Ablation::AlignReconst:
      s.loss.alpha = 0.0;
      break;
    case Ablation::NoG:
      s.use_projection = false;
      s.loss.focalize = false;
      break;
    case Ablation::NoPlus:
      s.loss.focalize = false;
      s.loss.pairs = loss::PairTerms::NegativesOnly;
      break;
    case Ablation::NoMinus:
      s.loss.focalize = false;
      s.loss.pairs = loss::PairTerms::PositivesOnly;
      break;
    case Ablation::Covil:
      s.loss.focalize = false;
      break;
    case Ablation::Full:
      s.loss.focalize = true;
      break;
  }
  return s;
}

void TrainConfig::validate() const {
  if (batch_anchors < 2) throw InvalidConfig("train.batch_anchors must be >= 2");
  if (epochs < 0) throw InvalidConfig("train.epochs must be >= 0");
  if (!(lr > 0.0)) throw InvalidConfig("train.lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw InvalidConfig("train.lr_decay must lie in (0, 1]");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.eps > 0.0)) {
    throw InvalidConfig("invalid Adam hyperparameters");
  }
  loss.validate();
}

double lr_for_epoch(const TrainConfig& cfg, int epoch) {
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch));
}

TrainingSet make_training_set(const skeleton::MultiViewCorpus& corpus) {
  std::map<int, SceneGroup> by_scene;
  TrainingSet set;
  for (const auto& seq : corpus.sequences) {
    if (set.length == 0) {
      set.length = seq.length();
      set.n_joints = seq.n_joints();
    }
    if (seq.length() != set.length || seq.n_joints() != set.n_joints) {
      throw ShapeMismatch("training sequences must share length and joint count (resample first)");
    }
    auto& group = by_scene[seq.scene_id];
    group.scene_id = seq.scene_id;
    group.views.push_back({seq.scene_id, seq.view_id, seq.frames});
  }
  for (auto& [id, group] : by_scene) {
    std::sort(group.views.begin(), group.views.end(),
              [](const auto& a, const auto& b) { return a.view_id < b.view_id; });
    for (std::size_t k = 1; k < group.views.size(); ++k) {
      if (group.views[k].view_id == group.views[k - 1].view_id) {
        throw InvalidConfig("scene " + std::to_string(id) + " has duplicate view " +
                            std::to_string(group.views[k].view_id));
      }
    }
    if (group.views.size() < 2) {
      throw InvalidConfig("scene " + std::to_string(id) + " has fewer than 2 views");
    }
    set.scenes.push_back(std::move(group));
  }
  return set;
}

std::vector<const SceneGroup*> sample_batch(const TrainingSet& data, int I, Rng& rng) {
  if (I < 1 || static_cast<std::size_t>(I) > data.scenes.size()) {
    throw CorpusTooSmall("need " + std::to_string(I) + " distinct scenes, corpus has " +
                         std::to_string(data.scenes.size()));
  }
  std::vector<std::size_t> idx(data.scenes.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates: the first I slots become a uniform draw.
  for (std::size_t k = 0; k < static_cast<std::size_t>(I); ++k) {
    const auto j = k + static_cast<std::size_t>(rng.below(idx.size() - k));
    std::swap(idx[k], idx[j]);
  }
  std::vector<const SceneGroup*> out;
  out.reserve(I);
  for (int k = 0; k < I; ++k) out.push_back(&data.scenes[idx[k]]);
  return out;
}

std::vector<std::vector<const SceneGroup*>> epoch_batches(const TrainingSet& data, int I,
                                                          Rng& rng) {
  if (data.scenes.size() < 2) throw CorpusTooSmall("need at least 2 scenes to form a batch");
  std::vector<const SceneGroup*> order;
  order.reserve(data.scenes.size());
  for (const auto& s : data.scenes) order.push_back(&s);
  rng.shuffle(std::span<const SceneGroup*>(order));
  std::vector<std::vector<const SceneGroup*>> batches;
  for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(I)) {
    const auto e = std::min(order.size(), b + static_cast<std::size_t>(I));
    if (e - b < 2) break;
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  return batches;
}

std::string epoch_record_to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["L_fc"] = r.contrastive;
  j["L_r"] = r.reconstruction;
  j["mean_pos_r"] = r.mean_positive_r;
  j["mean_neg_r"] = r.mean_negative_r;
  return j.dump();
}

BatchOutcome forward_backward(std::span<const SceneGroup* const> batch,
                              const model::ModelParams& params, const loss::LossConfig& cfg) {
  if (batch.size() < 2) throw BatchTooSmall("a batch needs at least 2 scenes");
  // Views present in every scene of the batch.
  std::vector<int> shared;
  for (const auto& v : batch.front()->views) shared.push_back(v.view_id);
  for (const auto* scene : batch) {
    std::vector<int> ids;
    for (const auto& v : scene->views) ids.push_back(v.view_id);
    std::vector<int> keep;
    std::set_intersection(shared.begin(), shared.end(), ids.begin(), ids.end(),
                          std::back_inserter(keep));
    shared = std::move(keep);
  }

  std::vector<const std::vector<skeleton::Pose>*> seqs;
  for (int view : shared) {
    for (const auto* scene : batch) {
      for (const auto& v : scene->views) {
        if (v.view_id == view) seqs.push_back(&v.frames);
      }
    }
  }
  for (const auto* scene : batch) {
    for (const auto& v : scene->views) {
      if (!std::binary_search(shared.begin(), shared.end(), v.view_id)) seqs.push_back(&v.frames);
    }
  }

  const auto frames = model::time_major_batch(seqs);
  const Tensor latent = model::encode(frames, params);
  const Tensor projected = model::project(latent, params);
  const auto recon = model::decode(projected, static_cast<int>(frames.size()), params);

  loss::ContrastiveBatch cb;
  const auto I = static_cast<Eigen::Index>(batch.size());
  for (std::size_t k = 0; k < shared.size(); ++k) {
    cb.views.push_back(ad::slice_rows(projected, static_cast<Eigen::Index>(k) * I,
                                      static_cast<Eigen::Index>(k + 1) * I));
    cb.view_ids.push_back(shared[k]);
  }
  for (const auto* scene : batch) cb.scene_ids.push_back(scene->scene_id);

  BatchOutcome out;
  out.has_contrastive_pairs = shared.size() >= 2;
  Tensor total;
  if (out.has_contrastive_pairs) {
    const auto terms = loss::total_objective(cb, recon, frames, cfg);
    total = terms.total;
    out.contrastive = terms.contrastive.item();
    out.reconstruction = terms.reconstruction.item();
    out.stats = loss::contrast_stats(cb);
  } else {
    const Tensor lr = loss::reconstruction_loss_Lr(recon, frames);
    total = ad::scale(lr, cfg.beta);
    out.reconstruction = lr.item();
  }
  out.total = total.item();
  total.backward();
  return out;
}

TrainResult train(const TrainingSet& data, model::ModelParams params, const TrainConfig& cfg,
                  const TrainHooks& hooks, std::optional<TrainState> resume) {
  cfg.validate();
  const auto variant = settings_for(cfg.ablation, cfg.loss);
  if (params.config.use_projection != variant.use_projection) {
    throw InvalidConfig("model.use_projection does not match ablation " +
                        std::string(to_string(cfg.ablation)));
  }
  TrainResult result;
  if (resume) result.state = std::move(*resume);
  auto tensors = params.parameters();
  std::vector<ad::Matrix> grads(tensors.size());

  for (int epoch = result.state.epochs_completed; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_for_epoch(cfg, epoch);
    Rng rng(derive_seed(cfg.seed, kEpochStream + static_cast<std::uint64_t>(epoch)));
    const auto batches = epoch_batches(data, cfg.batch_anchors, rng);

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    int stat_batches = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      BatchOutcome outcome;
      try {
        outcome = forward_backward(batches[b], params, variant.loss);
      } catch (const NonFiniteValue& e) {
        throw NonFiniteValue("epoch " + std::to_string(epoch + 1) + " batch " + std::to_string(b) +
                             ": " + e.what());
      }
      for (std::size_t i = 0; i < tensors.size(); ++i) {
        grads[i] = tensors[i].grad();
        tensors[i].zero_grad();
      }
      if (cfg.clip_norm > 0.0) clip_global_norm(grads, cfg.clip_norm);
      adam_step(tensors, grads, result.state.optimizer, lr, cfg.adam);

      rec.contrastive += outcome.contrastive;
      rec.reconstruction += outcome.reconstruction;
      if (outcome.has_contrastive_pairs) {
        rec.mean_positive_r += outcome.stats.mean_positive_r;
        rec.mean_negative_r += outcome.stats.mean_negative_r;
        ++stat_batches;
      }
    }
    if (!batches.empty()) {
      rec.contrastive /= static_cast<double>(batches.size());
      rec.reconstruction /= static_cast<double>(batches.size());
    }
    if (stat_batches > 0) {
      rec.mean_positive_r /= stat_batches;
      rec.mean_negative_r /= stat_batches;
    }
    result.state.epochs_completed = epoch + 1;
    result.log.push_back(rec);
    if (hooks.on_epoch_end) hooks.on_epoch_end(rec, params, result.state);
  }
  result.next_lr = lr_for_epoch(cfg, result.state.epochs_completed);
  result.params = std::move(params);
  return result;
}

}  // namespace focovil::train
