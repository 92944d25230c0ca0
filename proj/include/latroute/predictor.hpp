#pragma once

#include "latroute/features.hpp"
#include "latroute/irt.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace latroute {

struct FeatureVector {
  Vec semantic;    // d_sem
  Vec structural;  // kStructuralFeatures, raw (standardised inside the model)
};

// Partition of the latent dimensions into groups of correlated
// discrimination coordinates.
struct ClusterAssignment {
  std::vector<std::vector<int>> clusters;  // sorted by smallest member
  Mat abs_correlation;                     // |Pearson| between alpha columns
  std::vector<int> constant_dims;          // columns with zero variance (correlation taken as 0)

  std::size_t size() const { return clusters.size(); }
  int dim() const;
  void validate(int dim) const;
};

// Average-linkage agglomeration on 1 - |corr| until `count` groups remain.
ClusterAssignment cluster_dimensions(const Mat& item_alphas, int count);

struct PredictorShape {
  int d_sem = 64;
  int dim = 20;
  int trunk_width = 128;
  int trunk_depth = 2;
  int head_width = 64;
};

struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

struct FeatureScaler {
  Vec mean;
  Vec stddev;  // 0 marks a constant feature, which standardises to 0
  Vec apply(const Vec& raw) const;
  static FeatureScaler identity(std::size_t n);
  static FeatureScaler fit(const std::vector<Vec>& rows);
};

enum class EmbedderKind { kHashing, kFile };

struct PredictorModel {
  PredictorShape shape;
  ClusterAssignment clusters;
  std::vector<ParamBlock> blocks;
  std::vector<double> params;  // flat, column-major per block
  Vec mean_b;
  FeatureScaler scaler;
  EmbedderKind embedder = EmbedderKind::kHashing;
  std::vector<double> loss_history;  // mean batch loss per epoch

  // Random initialisation with the standard block layout.
  static PredictorModel create(const PredictorShape& shape, ClusterAssignment clusters, std::uint64_t seed);

  std::size_t num_clusters() const { return clusters.size(); }
  const ParamBlock& block(const std::string& name) const;
  Eigen::Map<Mat> view(const std::string& name);
  Eigen::Map<const Mat> view(const std::string& name) const;
  void validate() const;
};

struct Prediction {
  Vec alpha;
  Vec b;
};

Prediction forward(const PredictorModel& model, const FeatureVector& features);

FeatureVector make_features(std::string_view text, const HashingEmbedder& embedder);

struct TrainingExample {
  std::string query_id;
  std::string text;
  FeatureVector features;
  Vec alpha;
  Vec b;
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int clusters = 4;
  std::uint64_t seed = 0;
  double disc_weight = 1.0;  // lambda on the discrimination MSE
  int trunk_width = 128;
  int trunk_depth = 2;
  int head_width = 64;
  EmbedderKind embedder = EmbedderKind::kHashing;
  bool parallel = true;
};

// MSE(b_hat, b) + disc_weight * MSE(alpha_hat, alpha), averaged over the
// batch and dimensions. When `grad` is non-null it receives dL/dparams.
double batch_loss(const PredictorModel& model, std::span<const TrainingExample> batch, double disc_weight,
                  std::vector<double>* grad, bool parallel = false);

PredictorModel train(const std::vector<TrainingExample>& examples, const CalibratedSpace& space,
                     const TrainConfig& config);

}  // namespace latroute
