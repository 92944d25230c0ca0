#pragma once

#include "latroute/anchor.hpp"
#include "latroute/estimators.hpp"
#include "latroute/irt.hpp"
#include "latroute/profile.hpp"
#include "latroute/router.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace latroute::sim {

enum class ScoreMode { kGraded, kBernoulli };

struct SyntheticModel {
  std::string model_id;
  Vec theta;
  ModelPricing pricing;
  LatencyProfile latency;  // true TTFT / TPOT
  double verbosity = 1.0;  // multiplies the shared length curve
};

// Planted world. Priors: theta, b ~ N(0, I); alpha = |N(0, I)|.
// True output length of model m on item i is
//   verbosity_m * (20 + 200 * sigmoid(s_i)),  s_i = alpha_i . b_i,
// which is monotone in s by construction.
struct SyntheticWorld {
  std::uint64_t seed = 0;
  int dim = 0;
  double noise = 0.0;
  ScoreMode mode = ScoreMode::kGraded;
  std::vector<SyntheticModel> models;
  std::vector<ItemParams> items;  // ids item-0000 ...
  std::vector<std::string> texts;

  std::size_t item_index(const std::string& item_id) const;
  double probability(const Vec& theta, std::size_t item) const;
  double true_length(const SyntheticModel& model, std::size_t item) const;
  double true_latency(const SyntheticModel& model, double length) const;
  double true_cost(const SyntheticModel& model, std::size_t item) const;  // whitespace input tokens

  CalibratedSpace planted_space() const;
  // Scores of every model on every item. Graded mode with noise 0 gives the
  // exact probabilities; otherwise scores are perturbed or sampled from a
  // stream derived from the world seed.
  ResponseMatrix responses() const;
  // Anchor answers of one model, drawn the same way as responses().
  std::vector<ProfilingObservation> observe(const SyntheticModel& model, const std::vector<std::string>& item_ids,
                                            std::uint64_t seed) const;
  // Output lengths and latencies on the given items, with multiplicative
  // noise of relative size `noise`.
  std::vector<AnchorMeasurement> measure(const SyntheticModel& model, const std::vector<std::string>& item_ids,
                                         std::uint64_t seed) const;
  // A fresh model from the same priors, outside the world's population.
  SyntheticModel sample_model(std::string model_id, std::uint64_t seed) const;
};

SyntheticWorld generate_world(std::uint64_t seed, int models, int items, int dim, double noise = 0.0,
                              ScoreMode mode = ScoreMode::kGraded);

// ---------------------------------------------------------------------------
// anchor sampling ablation

enum class AnchorStrategy { kRandom, kDiffBased, kDiscBased, kTaskAware, kDOptimal };
inline constexpr AnchorStrategy kAllStrategies[] = {AnchorStrategy::kRandom, AnchorStrategy::kDiffBased,
                                                    AnchorStrategy::kDiscBased, AnchorStrategy::kTaskAware,
                                                    AnchorStrategy::kDOptimal};
std::string_view to_string(AnchorStrategy s);

// random: uniform without replacement; diff-based: largest ||b||;
// disc-based: largest ||alpha||; task-aware: split items into n
// equal-frequency bins of s = alpha . b and take the largest ||alpha|| in
// each; d-optimality: greedy log-det. Ties go to the smaller item id.
std::vector<std::string> select_by_strategy(AnchorStrategy strategy, const std::vector<ItemParams>& items,
                                            std::size_t n, std::uint64_t seed, double epsilon = 1e-6);

struct TrialResult {
  int trial = 0;
  double theta_error = 0.0;  // ||theta_hat - theta||
  double mae = 0.0;          // mean |p_hat - p| over all items
};

struct StrategyReport {
  AnchorStrategy strategy = AnchorStrategy::kRandom;
  std::size_t anchors = 0;
  std::vector<TrialResult> trials;
  double mean_theta_error = 0.0;
  double mean_mae = 0.0;
};

struct StrategyOptions {
  CalibrationConfig profiling;
  double epsilon = 1e-6;
  bool parallel = true;
};

// Trial t profiles one fresh planted model with every strategy, so reports
// are paired by trial index. Profiling happens in the planted space.
std::vector<StrategyReport> compare_sampling_strategies(const SyntheticWorld& world, std::size_t n, int trials,
                                                        const StrategyOptions& options = {});

// ---------------------------------------------------------------------------
// evolving pool

struct PoolSetup {
  CalibratedSpace space;
  AnchorSet anchors;
  std::vector<std::string> eval_items;  // fixed evaluation batch
};

// Runs the one-off fitting for a pool simulation: calibration on the world's
// responses, anchor selection, and the evaluation batch (non-anchor items in
// id order).
PoolSetup prepare_pool(const SyntheticWorld& world, std::size_t anchors, std::size_t eval_batch,
                       const CalibrationConfig& calibration);

// Anchor-only onboarding: ability by profiling, verbosity and latency from
// anchor measurements, list pricing.
ModelProfile onboard_model(const SyntheticWorld& world, const PoolSetup& setup, const SyntheticModel& model,
                           const CalibrationConfig& profiling, std::uint64_t seed);

struct PoolScenario {
  std::string policy_name = "max-acc";
  PolicyWeights weights = presets::kMaxAccuracy;
  GlobalConstraints constraints;
  bool normalize = false;
  std::uint64_t seed = 0;
  CalibrationConfig profiling;
};

struct LoggedChoice {
  std::string query_id;
  std::string model_id;
  double accuracy = 0.0;  // true probability of a correct answer
  double cost = 0.0;
  double latency = 0.0;
};

struct PoolStep {
  int step = 0;
  std::vector<std::string> pool;  // sorted
  std::string onboarded;
  std::string evicted;
  double reward = 0.0;  // observed, under the scenario weights
  double total_cost = 0.0;
  double total_latency = 0.0;
  double planned_cost = 0.0;
  double planned_latency = 0.0;
  bool feasible = true;
  std::string solver;
  std::string pool_hash;
  std::vector<LoggedChoice> choices;
};

struct PoolRun {
  std::vector<PoolStep> steps;
  // Calls to fit_calibration / predictor training while the run was active.
  std::uint64_t calibrations = 0;
  std::uint64_t trainings = 0;
};

// Step 0 routes the initial pool. Each later step onboards the next stream
// model, evicts the member with the lowest mean utility on the evaluation
// batch (newest first on ties), and routes again.
PoolRun simulate_evolving_pool(const SyntheticWorld& world, const PoolSetup& setup,
                               const std::vector<SyntheticModel>& initial_pool,
                               const std::vector<SyntheticModel>& stream, const PoolScenario& scenario);

// Models whose theta is the running elementwise maximum plus delta, with
// pricing, latency and verbosity copied from `pool.front()`.
std::vector<SyntheticModel> dominance_stream(const std::vector<SyntheticModel>& pool, int steps, double delta);
// Copies of `models` sharing the economics of `reference`.
std::vector<SyntheticModel> with_shared_economics(std::vector<SyntheticModel> models, const SyntheticModel& reference);

std::string pool_hash(std::vector<std::string> model_ids);

// step, policy, reward, total_cost, total_latency, pool_hash, then
// planned_cost, planned_latency, feasible, onboarded, evicted.
void write_pool_metrics_csv(const PoolRun& run, const std::string& policy, const std::string& path);
// step, query_id, model_id, accuracy, cost, latency.
void write_pool_log_csv(const PoolRun& run, const std::string& path);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace latroute::sim
