#include <benchmark/benchmark.h>

#include <random>

#include "focovil/clustering.hpp"
#include "focovil/evaluation.hpp"
#include "focovil/losses.hpp"
#include "focovil/model.hpp"
#include "focovil/skeleton.hpp"
#include "focovil/synth.hpp"

using namespace focovil;

namespace {

ad::Matrix uniform(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ad::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
  return m;
}

void BM_EncodeBatch(benchmark::State& state) {
  const int B = static_cast<int>(state.range(0));
  const int T = 20;
  std::mt19937_64 gen(1);
  model::ModelConfig c;
  c.input_dim = 48;
  c.hidden = 16;
  c.layers = 1;
  const auto p = model::ModelParams::initialize(c);
  std::vector<ad::Tensor> frames;
  for (int t = 0; t < T; ++t) frames.push_back(ad::Tensor::constant(uniform(gen, B, 48)));
  for (auto _ : state) {
    auto z = model::encode(frames, p);
    benchmark::DoNotOptimize(z.value().data());
  }
  state.SetItemsProcessed(state.iterations() * B);
}
BENCHMARK(BM_EncodeBatch)->Arg(1)->Arg(32)->Arg(96);

void BM_EncodeBackward(benchmark::State& state) {
  std::mt19937_64 gen(2);
  model::ModelConfig c;
  c.input_dim = 48;
  c.hidden = 16;
  c.layers = 1;
  const auto p = model::ModelParams::initialize(c);
  std::vector<ad::Tensor> frames;
  for (int t = 0; t < 20; ++t) frames.push_back(ad::Tensor::constant(uniform(gen, 64, 48)));
  for (auto _ : state) {
    auto loss = ad::sum(model::project(model::encode(frames, p), p));
    loss.backward();
  }
}
BENCHMARK(BM_EncodeBackward);

void BM_FocalizedLoss(benchmark::State& state) {
  const auto I = state.range(0);
  std::mt19937_64 gen(3);
  loss::ContrastiveBatch b;
  for (int v = 0; v < 3; ++v) {
    b.views.push_back(ad::Tensor::parameter(uniform(gen, I, 32)));
    b.view_ids.push_back(v);
  }
  for (auto _ : state) {
    auto l = loss::focalized_loss_Lfc(b, {});
    l.backward();
    benchmark::DoNotOptimize(l.item());
  }
}
BENCHMARK(BM_FocalizedLoss)->Arg(8)->Arg(32)->Arg(64);

void BM_OneNearestNeighbour(benchmark::State& state) {
  std::mt19937_64 gen(4);
  eval::EmbeddingSet train, test;
  train.rows = uniform(gen, 600, 32);
  test.rows = uniform(gen, 300, 32);
  for (int i = 0; i < 600; ++i) train.labels.push_back(i % 5);
  for (int i = 0; i < 300; ++i) test.labels.push_back(i % 5);
  train.scene_ids = train.view_ids = std::vector<int>(600, 0);
  test.scene_ids = test.view_ids = std::vector<int>(300, 0);
  for (auto _ : state) benchmark::DoNotOptimize(eval::one_nn_predict(train, test));
}
BENCHMARK(BM_OneNearestNeighbour);

void BM_KMeans(benchmark::State& state) {
  std::mt19937_64 gen(5);
  const Eigen::MatrixXd x = uniform(gen, 300, 32);
  for (auto _ : state) benchmark::DoNotOptimize(eval::kmeans(x, 5, 1).sse.back());
}
BENCHMARK(BM_KMeans);

void BM_Gmm(benchmark::State& state) {
  std::mt19937_64 gen(6);
  const Eigen::MatrixXd x = uniform(gen, 300, 32);
  for (auto _ : state) benchmark::DoNotOptimize(eval::gmm(x, 5, 1).iterations);
}
BENCHMARK(BM_Gmm);

void BM_PreprocessSequence(benchmark::State& state) {
  synth::GeneratorConfig g;
  g.n_classes = 1;
  g.scenes_per_class = 1;
  g.n_views = 2;
  const auto corpus = synth::generate_corpus(g);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        skeleton::preprocess(corpus.sequences[0], corpus.topology, {.target_len = 20, .align = true}));
  }
}
BENCHMARK(BM_PreprocessSequence);

}  // namespace
BENCHMARK_MAIN();
