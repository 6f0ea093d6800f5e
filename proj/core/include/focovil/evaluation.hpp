#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "focovil/clustering.hpp"
#include "focovil/metrics.hpp"
#include "focovil/model.hpp"
#include "focovil/skeleton.hpp"

namespace focovil::eval {

/// Encoder outputs f_e(X), one row per sequence, with the sequence metadata.
/// A missing class label is stored as -1.
struct EmbeddingSet {
  Eigen::MatrixXd rows;
  std::vector<int> scene_ids;
  std::vector<int> view_ids;
  std::vector<int> labels;

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
  bool empty() const { return rows.rows() == 0; }
  /// Rows at the given indices, in that order.
  EmbeddingSet subset(std::span<const Eigen::Index> idx) const;
  /// Throws LengthMismatch / NonFiniteValue / LabelOutOfRange when metadata
  /// lengths disagree, a value is not finite, or (if require_labels) a row
  /// has no label.
  void validate(bool require_labels) const;
};

/// Encodes every sequence of a preprocessed corpus. Row i equals
/// model::encode(corpus.sequences[i], params) exactly.
EmbeddingSet extract_embeddings(const skeleton::MultiViewCorpus& corpus,
                                const model::ModelParams& params);

/// Train/test partition rule.
///   cross-view:V       test = every sequence with view_id V
///   scene-disjoint:P   test = P percent of scenes, spread evenly over the
///                      scene ids in ascending order
struct Split {
  enum class Kind { CrossView, SceneDisjoint };
  Kind kind = Kind::CrossView;
  int value = 0;

  static Split parse(std::string_view text);
  std::string to_string() const;
  friend bool operator==(const Split&, const Split&) = default;
};

struct SplitIndices {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
};

/// Row partition for rows with the given metadata, in row order.
SplitIndices split_indices(std::span<const int> scene_ids, std::span<const int> view_ids,
                           const Split& split);

struct CorpusSplit {
  skeleton::MultiViewCorpus train;
  skeleton::MultiViewCorpus test;
};

/// Partitions a corpus; n_views of each side counts the views it contains.
CorpusSplit split_corpus(const skeleton::MultiViewCorpus& corpus, const Split& split);

/// Labels each test row with the label of the train row of highest cosine
/// similarity (lowest train index on ties). Throws EmptyTrainSet.
std::vector<int> one_nn_predict(const EmbeddingSet& train, const EmbeddingSet& test);
double one_nn_accuracy(const EmbeddingSet& train, const EmbeddingSet& test);

struct ProbeConfig {
  double lr = 1e-3;
  int epochs = 300;
};

struct ProbeResult {
  std::vector<int> predictions;
  double accuracy = 0.0;
  /// Full-batch training cross-entropy before each epoch's update.
  std::vector<double> loss;
};

/// One affine layer + softmax trained with cross-entropy by full-batch Adam
/// on frozen train embeddings (inputs standardized with train statistics).
ProbeResult linear_probe(const EmbeddingSet& train, const EmbeddingSet& test,
                         const ProbeConfig& cfg = {});

struct EvalConfig {
  Split split;
  ProbeConfig probe;
  std::uint64_t cluster_seed = 0;
  /// 0 means one cluster per class present in the test set.
  int n_clusters = 0;
};

struct ClusterScores {
  double purity = 0.0;
  double ari = 0.0;
};

struct MetricsReport {
  std::string split;
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  int n_classes = 0;
  double one_nn_accuracy = 0.0;
  double linear_accuracy = 0.0;
  ClusterScores gmm;
  ClusterScores kmeans;
  /// From the 1-NN predictions on the test rows.
  Eigen::MatrixXi confusion;
};

/// Runs every evaluator: 1-NN and linear probe from train to test rows,
/// GMM and K-Means on the test rows.
MetricsReport evaluate(const EmbeddingSet& train, const EmbeddingSet& test, const EvalConfig& cfg);

/// Splits, encodes, and evaluates a preprocessed labeled corpus.
MetricsReport evaluate_corpus(const skeleton::MultiViewCorpus& corpus,
                              const model::ModelParams& params, const EvalConfig& cfg);

/// Pretty-printed JSON report.
std::string report_to_json(const MetricsReport& r);

/// CSV rows "scene_id,view_id,class_label,v0,...,v{d-1}" after a header line.
/// Values use shortest round-trip formatting.
void write_embeddings_csv(std::ostream& out, const EmbeddingSet& set);

}  // namespace focovil::eval
