#include "latroute/anchor.hpp"

#include "latroute/kernels.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace latroute {

Mat fisher_information(const std::vector<ItemParams>& items, const LatentAbility& ability) {
  const auto dim = ability.theta.size();
  Mat info = Mat::Zero(dim, dim);
  for (const auto& item : items) {
    require_same_dim(("fisher_information alpha of " + item.item_id).c_str(), static_cast<std::size_t>(dim),
                     static_cast<std::size_t>(item.alpha.size()));
    const double p = predict_prob(ability, item);
    info.noalias() += p * (1.0 - p) * item.alpha * item.alpha.transpose();
  }
  return info;
}

InformationState InformationState::regularized(int dim, double epsilon) {
  if (dim < 1) throw Error("information state: dimension must be >= 1");
  if (!(epsilon > 0.0)) throw Error("information state: epsilon must be positive");
  InformationState s;
  s.matrix = epsilon * Mat::Identity(dim, dim);
  s.inverse = (1.0 / epsilon) * Mat::Identity(dim, dim);
  s.log_det = dim * std::log(epsilon);
  return s;
}

double marginal_gain(const InformationState& state, const ItemParams& item) {
  require_same_dim("marginal_gain alpha", static_cast<std::size_t>(state.dim()),
                   static_cast<std::size_t>(item.alpha.size()));
  return std::log1p(item.alpha.dot(state.inverse * item.alpha));
}

double InformationState::add(const ItemParams& item) {
  require_same_dim("information update alpha", static_cast<std::size_t>(dim()),
                   static_cast<std::size_t>(item.alpha.size()));
  const Vec u = inverse * item.alpha;
  const double q = item.alpha.dot(u);
  inverse.noalias() -= (u * u.transpose()) / (1.0 + q);
  inverse = 0.5 * (inverse + inverse.transpose());
  matrix.noalias() += item.alpha * item.alpha.transpose();
  const double gain = std::log1p(q);
  log_det += gain;
  selected.push_back(item.item_id);
  return gain;
}

void InformationState::refresh_dense() {
  Eigen::LLT<Mat> llt(matrix);
  if (llt.info() != Eigen::Success) throw Error("information matrix is not positive definite");
  inverse = llt.solve(Mat::Identity(matrix.rows(), matrix.cols()));
  const auto diag = llt.matrixL().toDenseMatrix().diagonal();
  log_det = 2.0 * diag.array().log().sum();
}

AnchorSet select_anchors(const std::vector<ItemParams>& items, std::size_t count, double epsilon,
                         const AnchorOptions& options) {
  if (!(epsilon > 0.0)) throw Error(fmt::format("select_anchors: epsilon must be positive, got {}", epsilon));
  if (count > items.size())
    throw Error(fmt::format("select_anchors: requested {} anchors from {} items", count, items.size()));
  AnchorSet result;
  result.epsilon = epsilon;
  if (items.empty()) return result;
  const int dim = static_cast<int>(items.front().alpha.size());
  result.dim = dim;

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return items[a].item_id < items[b].item_id; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (items[order[k]].item_id == items[order[k - 1]].item_id)
      throw Error(fmt::format("select_anchors: duplicate item id '{}'", items[order[k]].item_id));
  }

  Mat alphas(static_cast<Eigen::Index>(items.size()), dim);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& a = items[order[r]].alpha;
    require_same_dim(("select_anchors alpha of " + items[order[r]].item_id).c_str(), static_cast<std::size_t>(dim),
                     static_cast<std::size_t>(a.size()));
    alphas.row(static_cast<Eigen::Index>(r)) = a.transpose();
  }

  auto state = InformationState::regularized(dim, epsilon);
  std::vector<char> taken(items.size(), 0);
  std::vector<double> gains(items.size(), 0.0);
  for (std::size_t step = 0; step < count; ++step) {
    if (options.parallel)
      kernels::omp::log_det_gains(state.inverse, alphas, taken, gains);
    else
      kernels::serial::log_det_gains(state.inverse, alphas, taken, gains);
    // First strict maximum in id order.
    std::size_t best = items.size();
    for (std::size_t r = 0; r < gains.size(); ++r) {
      if (taken[r]) continue;
      if (best == items.size() || gains[r] > gains[best]) best = r;
    }
    taken[best] = 1;
    const double gain = state.add(items[order[best]]);
    if (options.dense_check) {
      const Mat incremental = state.inverse;
      state.refresh_dense();
      const double rel = (incremental - state.inverse).norm() / state.inverse.norm();
      if (rel > 1e-6) throw Error(fmt::format("select_anchors: incremental inverse drifted (relative error {})", rel));
    }
    result.item_ids.push_back(items[order[best]].item_id);
    result.gains.push_back(gain);
  }
  return result;
}

double subset_log_det(const std::vector<ItemParams>& items, const std::vector<std::size_t>& subset, double epsilon) {
  if (items.empty()) return 0.0;
  const auto dim = items.front().alpha.size();
  Mat m = epsilon * Mat::Identity(dim, dim);
  for (std::size_t idx : subset) m.noalias() += items.at(idx).alpha * items.at(idx).alpha.transpose();
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw Error("subset_log_det: matrix not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace latroute
