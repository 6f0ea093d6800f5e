#include "focovil/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>

#include "focovil/errors.hpp"
#include "focovil/losses.hpp"
#include "focovil/optim.hpp"

namespace focovil::eval {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

EmbeddingSet EmbeddingSet::subset(std::span<const Eigen::Index> idx) const {
  EmbeddingSet out;
  out.rows.resize(static_cast<Eigen::Index>(idx.size()), rows.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto r = idx[i];
    out.rows.row(static_cast<Eigen::Index>(i)) = rows.row(r);
    out.scene_ids.push_back(scene_ids[static_cast<std::size_t>(r)]);
    out.view_ids.push_back(view_ids[static_cast<std::size_t>(r)]);
    out.labels.push_back(labels[static_cast<std::size_t>(r)]);
  }
  return out;
}

void EmbeddingSet::validate(bool require_labels) const {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (scene_ids.size() != n || view_ids.size() != n || labels.size() != n) {
    throw LengthMismatch("embedding metadata does not match row count");
  }
  if (!rows.allFinite()) throw NonFiniteValue("embedding set holds a non-finite value");
  if (require_labels) {
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] < 0) throw LabelOutOfRange("row " + std::to_string(i) + " has no class label");
    }
  }
}

EmbeddingSet extract_embeddings(const skeleton::MultiViewCorpus& corpus,
                                const model::ModelParams& params) {
  EmbeddingSet out;
  const auto n = static_cast<Eigen::Index>(corpus.sequences.size());
  out.rows.resize(n, params.config.latent_dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& seq = corpus.sequences[static_cast<std::size_t>(i)];
    out.rows.row(i) = model::encode(seq, params);
    out.scene_ids.push_back(seq.scene_id);
    out.view_ids.push_back(seq.view_id);
    out.labels.push_back(seq.class_label.value_or(-1));
  }
  return out;
}

Split Split::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidConfig("split '" + std::string(text) + "' must look like cross-view:V or scene-disjoint:P");
  }
  const auto kind = text.substr(0, colon);
  const auto arg = text.substr(colon + 1);
  Split s;
  if (kind == "cross-view") {
    s.kind = Kind::CrossView;
  } else if (kind == "scene-disjoint") {
    s.kind = Kind::SceneDisjoint;
  } else {
    throw InvalidConfig("unknown split kind '" + std::string(kind) + "'");
  }
  const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), s.value);
  if (ec != std::errc{} || ptr != arg.data() + arg.size() || arg.empty()) {
    throw InvalidConfig("split argument '" + std::string(arg) + "' is not an integer");
  }
  if (s.value < 0) throw InvalidConfig("split argument must be non-negative");
  if (s.kind == Kind::SceneDisjoint && (s.value < 1 || s.value > 99)) {
    throw InvalidConfig("scene-disjoint percentage must be in [1, 99]");
  }
  return s;
}

std::string Split::to_string() const {
  return (kind == Kind::CrossView ? "cross-view:" : "scene-disjoint:") + std::to_string(value);
}

SplitIndices split_indices(std::span<const int> scene_ids, std::span<const int> view_ids,
                           const Split& split) {
  if (scene_ids.size() != view_ids.size()) throw LengthMismatch("split: metadata lengths differ");
  std::set<int> test_scenes;
  if (split.kind == Split::Kind::SceneDisjoint) {
    const std::set<int> ids(scene_ids.begin(), scene_ids.end());
    long j = 0;
    for (int id : ids) {
      if ((j + 1) * split.value / 100 > j * split.value / 100) test_scenes.insert(id);
      ++j;
    }
  }
  SplitIndices out;
  for (std::size_t i = 0; i < scene_ids.size(); ++i) {
    const bool is_test = split.kind == Split::Kind::CrossView ? view_ids[i] == split.value
                                                              : test_scenes.contains(scene_ids[i]);
    (is_test ? out.test : out.train).push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

CorpusSplit split_corpus(const skeleton::MultiViewCorpus& corpus, const Split& split) {
  std::vector<int> scenes, views;
  for (const auto& s : corpus.sequences) {
    scenes.push_back(s.scene_id);
    views.push_back(s.view_id);
  }
  const auto idx = split_indices(scenes, views, split);
  CorpusSplit out;
  out.train.topology = corpus.topology;
  out.test.topology = corpus.topology;
  for (auto i : idx.train) out.train.sequences.push_back(corpus.sequences[static_cast<std::size_t>(i)]);
  for (auto i : idx.test) out.test.sequences.push_back(corpus.sequences[static_cast<std::size_t>(i)]);
  for (auto* part : {&out.train, &out.test}) {
    std::set<int> seen;
    for (const auto& s : part->sequences) seen.insert(s.view_id);
    part->n_views = static_cast<int>(seen.size());
  }
  return out;
}

std::vector<int> one_nn_predict(const EmbeddingSet& train, const EmbeddingSet& test) {
  if (train.empty()) throw EmptyTrainSet("1-NN needs at least one training row");
  if (train.dim() != test.dim() && !test.empty()) {
    throw ShapeMismatch("train and test embeddings differ in width");
  }
  const RowMajor a = train.rows;
  const RowMajor b = test.rows;
  const auto d = static_cast<std::size_t>(a.cols());
  std::vector<int> pred(static_cast<std::size_t>(b.rows()));
  for (Eigen::Index t = 0; t < b.rows(); ++t) {
    std::span<const double> q(b.data() + t * b.cols(), d);
    Eigen::Index best = 0;
    double best_r = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double r = loss::cosine_r(std::span<const double>(a.data() + i * a.cols(), d), q);
      if (r > best_r) {
        best_r = r;
        best = i;
      }
    }
    pred[static_cast<std::size_t>(t)] = train.labels[static_cast<std::size_t>(best)];
  }
  return pred;
}

double one_nn_accuracy(const EmbeddingSet& train, const EmbeddingSet& test) {
  return accuracy(one_nn_predict(train, test), test.labels);
}

ProbeResult linear_probe(const EmbeddingSet& train, const EmbeddingSet& test,
                         const ProbeConfig& cfg) {
  train.validate(true);
  test.validate(true);
  if (train.empty()) throw EmptyTrainSet("linear probe needs at least one training row");
  if (!(cfg.lr > 0.0) || cfg.epochs < 0) throw InvalidConfig("probe lr must be > 0, epochs >= 0");
  int n_classes = 0;
  for (int l : train.labels) n_classes = std::max(n_classes, l + 1);
  for (int l : test.labels) n_classes = std::max(n_classes, l + 1);

  const Eigen::RowVectorXd mean = train.rows.colwise().mean();
  Eigen::RowVectorXd scale =
      ((train.rows.rowwise() - mean).array().square().colwise().mean()).sqrt().matrix();
  scale = scale.unaryExpr([](double s) { return s > 1e-12 ? 1.0 / s : 1.0; });
  auto standardize = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    return ((x.rowwise() - mean).array().rowwise() * scale.array()).matrix();
  };
  const Eigen::MatrixXd x = standardize(train.rows);
  const auto n = static_cast<double>(x.rows());

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(x.rows(), n_classes);
  for (Eigen::Index i = 0; i < x.rows(); ++i) onehot(i, train.labels[static_cast<std::size_t>(i)]) = 1.0;

  std::vector<ad::Tensor> params{ad::Tensor::parameter(ad::Matrix::Zero(x.cols(), n_classes)),
                                 ad::Tensor::parameter(ad::Matrix::Zero(1, n_classes))};
  train::AdamState state;
  ProbeResult out;
  auto logits_of = [&](const Eigen::MatrixXd& in) -> Eigen::MatrixXd {
    Eigen::MatrixXd z = in * params[0].value();
    z.rowwise() += Eigen::RowVectorXd(params[1].value());
    return z;
  };
  for (int e = 0; e < cfg.epochs; ++e) {
    Eigen::MatrixXd z = logits_of(x);
    const Eigen::VectorXd m = z.rowwise().maxCoeff();
    z.colwise() -= m;
    Eigen::MatrixXd p = z.array().exp();
    const Eigen::VectorXd zsum = p.rowwise().sum();
    p.array().colwise() /= zsum.array();
    out.loss.push_back(-(z.array() * onehot.array()).sum() / n + zsum.array().log().sum() / n);
    const Eigen::MatrixXd dz = (p - onehot) / n;
    const std::vector<ad::Matrix> grads{x.transpose() * dz, dz.colwise().sum()};
    train::adam_step(params, grads, state, cfg.lr);
  }

  const Eigen::MatrixXd zt = logits_of(standardize(test.rows));
  out.predictions.resize(static_cast<std::size_t>(zt.rows()));
  for (Eigen::Index i = 0; i < zt.rows(); ++i) {
    Eigen::Index best = 0;
    zt.row(i).maxCoeff(&best);
    out.predictions[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  out.accuracy = accuracy(out.predictions, test.labels);
  return out;
}

MetricsReport evaluate(const EmbeddingSet& train, const EmbeddingSet& test, const EvalConfig& cfg) {
  train.validate(true);
  test.validate(true);
  MetricsReport r;
  r.split = cfg.split.to_string();
  r.n_train = train.size();
  r.n_test = test.size();
  std::set<int> test_classes(test.labels.begin(), test.labels.end());
  for (int l : train.labels) r.n_classes = std::max(r.n_classes, l + 1);
  for (int l : test.labels) r.n_classes = std::max(r.n_classes, l + 1);

  const auto nn = one_nn_predict(train, test);
  r.one_nn_accuracy = accuracy(nn, test.labels);
  r.confusion = confusion_matrix(nn, test.labels, r.n_classes);
  r.linear_accuracy = linear_probe(train, test, cfg.probe).accuracy;

  const int k = cfg.n_clusters > 0 ? cfg.n_clusters : static_cast<int>(test_classes.size());
  const auto km = kmeans(test.rows, k, cfg.cluster_seed);
  r.kmeans = {purity(km.assignment, test.labels), ari(km.assignment, test.labels)};
  const auto gm = gmm(test.rows, k, cfg.cluster_seed);
  r.gmm = {purity(gm.assignment, test.labels), ari(gm.assignment, test.labels)};
  return r;
}

MetricsReport evaluate_corpus(const skeleton::MultiViewCorpus& corpus,
                              const model::ModelParams& params, const EvalConfig& cfg) {
  const auto parts = split_corpus(corpus, cfg.split);
  return evaluate(extract_embeddings(parts.train, params), extract_embeddings(parts.test, params),
                  cfg);
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["split"] = r.split;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["n_classes"] = r.n_classes;
  j["one_nn_accuracy"] = r.one_nn_accuracy;
  j["linear_accuracy"] = r.linear_accuracy;
  j["gmm"] = {{"purity", r.gmm.purity}, {"ari", r.gmm.ari}};
  j["kmeans"] = {{"purity", r.kmeans.purity}, {"ari", r.kmeans.ari}};
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < r.confusion.cols(); ++c) row.push_back(r.confusion(i, c));
    rows.push_back(std::move(row));
  }
  j["confusion_matrix"] = std::move(rows);
  return j.dump(2) + "\n";
}

void write_embeddings_csv(std::ostream& out, const EmbeddingSet& set) {
  out << "scene_id,view_id,class_label";
  for (Eigen::Index c = 0; c < set.dim(); ++c) out << ",v" << c;
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    out << set.scene_ids[s] << ',' << set.view_ids[s] << ',';
    if (set.labels[s] >= 0) out << set.labels[s];
    for (Eigen::Index c = 0; c < set.dim(); ++c) {
      const auto res = std::to_chars(buf, buf + sizeof buf, set.rows(i, c));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace focovil::eval
