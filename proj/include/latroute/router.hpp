#pragma once

#include "latroute/estimators.hpp"
#include "latroute/irt.hpp"
#include "latroute/profile.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace latroute {

struct PolicyWeights {
  double w_p = 0.5;  // accuracy
  double w_c = 0.3;  // cost
  double w_t = 0.2;  // latency

  void validate() const;
};

namespace presets {
inline constexpr PolicyWeights kMaxAccuracy{0.8, 0.1, 0.1};
inline constexpr PolicyWeights kMinCost{0.1, 0.8, 0.1};
inline constexpr PolicyWeights kMinLatency{0.1, 0.1, 0.8};
inline constexpr PolicyWeights kBalanced{0.5, 0.3, 0.2};
}  // namespace presets

// Accepts max-acc, min-cost, min-lat, balanced.
PolicyWeights policy_by_name(std::string_view name);

struct GlobalConstraints {
  std::optional<double> max_total_cost;
  std::optional<double> max_total_latency;
  std::optional<double> min_mean_accuracy;

  bool empty() const { return !max_total_cost && !max_total_latency && !min_mean_accuracy; }
  void validate() const;
};

struct QueryModelEstimate {
  std::string query_id;
  std::string model_id;
  double p = 0.0;
  double cost = 0.0;
  double latency = 0.0;
};

// Row-major queries x models.
struct EstimateMatrix {
  std::vector<std::string> query_ids;
  std::vector<std::string> model_ids;
  std::vector<QueryModelEstimate> cells;

  std::size_t num_queries() const { return query_ids.size(); }
  std::size_t num_models() const { return model_ids.size(); }
  const QueryModelEstimate& at(std::size_t q, std::size_t m) const { return cells[q * model_ids.size() + m]; }
  QueryModelEstimate& at(std::size_t q, std::size_t m) { return cells[q * model_ids.size() + m]; }
  void validate() const;
};

struct QueryInput {
  std::string query_id;
  ItemParams params;  // predicted latent coordinates
  std::string text;
};

EstimateMatrix score_matrix(const std::vector<QueryInput>& queries, const std::vector<ModelProfile>& profiles,
                            const TokenizerRegistry& tokenizers, bool parallel = true);

enum class SolverKind { kExact, kHeuristic };
std::string_view to_string(SolverKind kind);

struct ConstraintSlack {
  std::optional<double> cost;      // bound - total
  std::optional<double> latency;   // bound - total
  std::optional<double> accuracy;  // total p - |Q| * p_min
};

struct Choice {
  std::string query_id;
  std::string model_id;
  std::size_t model_index = 0;
};

struct Assignment {
  std::vector<Choice> choices;  // query order
  double objective = 0.0;
  bool feasible = true;
  ConstraintSlack slack;
  SolverKind solver = SolverKind::kExact;
  std::optional<double> gap_bound;  // dual bound minus objective, heuristic only
  double total_cost = 0.0;
  double total_latency = 0.0;
  double total_p = 0.0;
};

struct RouteOptions {
  // Min-max normalise cost and latency over the batch before weighting.
  bool normalize = false;
  // Exact search is attempted when |Q| * |M| is at most this.
  std::size_t exact_threshold = 4096;
  // Branch-and-bound node budget; exceeding it falls back to the heuristic.
  std::size_t node_limit = 2'000'000;
  int lagrangian_iterations = 300;
  // Constraint satisfaction tolerance.
  double tolerance = 1e-9;
};

// Utility w_p p - w_c cost - w_t latency per cell (normalised if requested).
std::vector<double> utility_matrix(const EstimateMatrix& estimates, const PolicyWeights& weights, bool normalize);

Assignment route_unconstrained(const EstimateMatrix& estimates, const PolicyWeights& weights,
                               const RouteOptions& options = {});
Assignment route_constrained(const EstimateMatrix& estimates, const PolicyWeights& weights,
                             const GlobalConstraints& constraints, const RouteOptions& options = {});
// Lagrangian relaxation with greedy repair, exposed for comparison tests.
Assignment route_lagrangian(const EstimateMatrix& estimates, const PolicyWeights& weights,
                            const GlobalConstraints& constraints, const RouteOptions& options = {});

struct ObservedOutcome {
  double accuracy = 0.0;
  double cost = 0.0;
  double latency = 0.0;
};

struct RewardTerm {
  std::string query_id;
  std::string model_id;
  double reward = 0.0;
};

struct RewardReport {
  double total_reward = 0.0;
  std::vector<RewardTerm> per_query;
  PolicyWeights weights;
};

// Observed outcomes keyed by (query_id, model_id).
using ObservedTable = std::map<std::pair<std::string, std::string>, ObservedOutcome>;

RewardReport total_reward(const Assignment& assignment, const ObservedTable& observed, const PolicyWeights& weights);

// CSV: query_id, model_id, p, cost, latency, utility.
void write_assignment_csv(const Assignment& assignment, const EstimateMatrix& estimates,
                          const PolicyWeights& weights, bool normalize, const std::string& path);

}  // namespace latroute
