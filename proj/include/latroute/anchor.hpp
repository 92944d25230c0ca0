#pragma once

#include "latroute/irt.hpp"

#include <string>
#include <vector>

namespace latroute {

// Fisher information of an item set at a fixed ability:
// sum_i p_i (1 - p_i) alpha_i alpha_i^T.
Mat fisher_information(const std::vector<ItemParams>& items, const LatentAbility& ability);

// Accumulated discrimination matrix eps*I + sum alpha alpha^T with its inverse
// and log-determinant, updated by rank-one steps.
struct InformationState {
  Mat matrix;
  Mat inverse;
  double log_det = 0.0;
  std::vector<std::string> selected;

  static InformationState regularized(int dim, double epsilon);

  int dim() const { return static_cast<int>(matrix.rows()); }
  // Sherman-Morrison update of the inverse; returns the log-det gain.
  double add(const ItemParams& item);
  // Recompute inverse and log-det densely from `matrix`.
  void refresh_dense();
};

// log(1 + alpha^T inverse alpha): the log-det increase from adding alpha.
double marginal_gain(const InformationState& state, const ItemParams& item);

struct AnchorSet {
  std::vector<std::string> item_ids;
  std::vector<double> gains;
  double epsilon = 1e-6;
  int dim = 0;
};

struct AnchorOptions {
  bool parallel = true;
  // Re-derive the inverse densely after every pick and check the
  // incremental one against it (relative error 1e-6).
  bool dense_check = false;
};

// Greedy forward D-optimal selection over discrimination vectors only.
// Ties go to the smallest item id, so the result does not depend on input order.
AnchorSet select_anchors(const std::vector<ItemParams>& items, std::size_t count, double epsilon = 1e-6,
                         const AnchorOptions& options = {});

// log det(eps*I + sum alpha alpha^T) over the named subset, computed densely.
double subset_log_det(const std::vector<ItemParams>& items, const std::vector<std::size_t>& subset, double epsilon);

}  // namespace latroute
