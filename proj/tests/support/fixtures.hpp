#pragma once

// Small corpora and configurations shared by the tests.

#include "focovil/model.hpp"
#include "focovil/skeleton.hpp"
#include "focovil/synth.hpp"
#include "focovil/training.hpp"

namespace focovil::testing {

inline synth::GeneratorConfig tiny_generator(int classes = 2, int scenes_per_class = 4, int views = 2) {
  synth::GeneratorConfig g;
  g.n_classes = classes;
  g.scenes_per_class = scenes_per_class;
  g.n_views = views;
  g.n_joints = 6;
  g.seq_len = 10;
  g.rng_seed = 11;
  return g;
}

inline skeleton::MultiViewCorpus tiny_corpus(int classes = 2, int scenes_per_class = 4, int views = 2,
                                             int target_len = 5) {
  return skeleton::preprocess(synth::generate_corpus(tiny_generator(classes, scenes_per_class, views)),
                              {.target_len = target_len, .align = true});
}

inline model::ModelConfig tiny_model(int input_dim, bool use_projection = true) {
  model::ModelConfig m;
  m.input_dim = input_dim;
  m.hidden = 4;
  m.layers = 1;
  m.use_projection = use_projection;
  m.seed = 3;
  return m;
}

inline train::TrainConfig tiny_train(int epochs, train::Ablation a = train::Ablation::Full) {
  train::TrainConfig t;
  t.batch_anchors = 4;
  t.epochs = epochs;
  t.lr = 1e-2;
  t.seed = 5;
  t.ablation = a;
  return t;
}

inline bool same_values(const model::ModelParams& a, const model::ModelParams& b) {
  const auto pa = a.named_parameters();
  const auto pb = b.named_parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name || pa[i].tensor.shape() != pb[i].tensor.shape()) return false;
    if (pa[i].tensor.value() != pb[i].tensor.value()) return false;  // exact
  }
  return a.config == b.config;
}

}  // namespace focovil::testing
