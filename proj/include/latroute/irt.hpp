#pragma once

#include "latroute/common.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace latroute {

struct LatentAbility {
  std::string model_id;
  Vec theta;
};

struct ItemParams {
  std::string item_id;
  Vec alpha;  // discrimination, elementwise >= 0
  Vec b;      // difficulty
};

// Dense model x item score table with a presence mask. Absent cells are
// skipped by every loss.
struct ResponseMatrix {
  std::vector<std::string> models;
  std::vector<std::string> items;
  Mat scores;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> present;

  ResponseMatrix() = default;
  ResponseMatrix(std::vector<std::string> model_ids, std::vector<std::string> item_ids);

  std::size_t num_models() const { return models.size(); }
  std::size_t num_items() const { return items.size(); }
  void set(std::size_t model, std::size_t item, double score);
  void validate() const;
};

struct CalibrationConfig {
  int dim = 20;
  int epochs = 6000;
  double learning_rate = 0.1;
  double lr_decay = 0.99;  // applied once per 100 epochs
  std::optional<Vec> prior_mean;  // defaults to zero
  double prior_precision = 1.0;
  std::uint64_t seed = 0;
  // Used by profile_new_model.
  double profile_tolerance = 1e-8;
  int profile_max_iters = 500;
  bool parallel = true;

  Vec mean_vector() const;
  void validate() const;
};

struct FitReport {
  double final_loss = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
  // Loss recorded every 100 epochs, plus the initial loss at index 0.
  std::vector<double> checkpoints;
  int rejected_checkpoints = 0;
};

struct CalibratedSpace {
  int dim = 0;
  std::map<std::string, LatentAbility> abilities;
  std::map<std::string, ItemParams> items;
  FitReport fit_report;

  const ItemParams& item(const std::string& id) const;
  std::vector<ItemParams> item_list() const;
};

struct ProfilingObservation {
  std::string item_id;
  double score = 0.0;
};

// sigmoid(alpha . (theta - b)), strictly inside (0, 1).
double predict_prob(const LatentAbility& ability, const ItemParams& item);
double predict_prob(const Vec& theta, const Vec& alpha, const Vec& b);

// Binary cross entropy with p clamped to [1e-7, 1 - 1e-7].
double bce(double y, double p) noexcept;
// BCE(y, sigmoid(z)) evaluated without forming p.
double bce_logit(double y, double z) noexcept;

CalibratedSpace fit_calibration(const ResponseMatrix& responses, const CalibrationConfig& config);

LatentAbility profile_new_model(const std::vector<ProfilingObservation>& observations,
                                const CalibratedSpace& space, const CalibrationConfig& config,
                                std::string model_id = "new-model");

// Objective minimised by profile_new_model, exposed for optimality checks.
double profile_loss(const Vec& theta, const std::vector<ProfilingObservation>& observations,
                    const CalibratedSpace& space, const CalibrationConfig& config);
Vec profile_gradient(const Vec& theta, const std::vector<ProfilingObservation>& observations,
                     const CalibratedSpace& space, const CalibrationConfig& config);

// CSV: first column model_id, header row item ids, empty cell means missing.
ResponseMatrix read_response_csv(const std::string& path);
void write_response_csv(const ResponseMatrix& responses, const std::string& path);

}  // namespace latroute
