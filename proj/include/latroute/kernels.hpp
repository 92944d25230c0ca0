#pragma once

// Data-parallel inner loops. Each kernel has a serial reference in
// kernels::serial and an OpenMP version in kernels::omp; both perform the
// same floating point operations in the same per-element order, so their
// results are bitwise identical regardless of thread count.

#include "latroute/common.hpp"

#include <span>
#include <vector>

namespace latroute::kernels {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Parameters of the full-matrix 2PL fit. alpha = softplus(raw_alpha).
struct IrtParams {
  Mat theta;      // models x D
  Mat raw_alpha;  // items x D
  Mat b;          // items x D
};

struct IrtGradient {
  double data_loss = 0.0;  // sum of BCE over present cells
  Mat theta;
  Mat raw_alpha;
  Mat b;
};

// Sum of BCE over present cells and its gradient with respect to every
// parameter (priors are not included).
namespace serial {
void irt_loss_grad(const Mat& scores, const Mask& present, const IrtParams& params,
                   IrtGradient& out);
double irt_loss(const Mat& scores, const Mask& present, const IrtParams& params);
}  // namespace serial

namespace omp {
void irt_loss_grad(const Mat& scores, const Mask& present, const IrtParams& params,
                   IrtGradient& out);
double irt_loss(const Mat& scores, const Mask& present, const IrtParams& params);
}  // namespace omp

// Rank-one log-det gains log(1 + a^T inv a) for every row of `alphas`
// (candidates x D). Rows flagged in `skip` get -inf.
namespace serial {
void log_det_gains(const Mat& inverse, const Mat& alphas, std::span<const char> skip,
                   std::span<double> gains);
}
namespace omp {
void log_det_gains(const Mat& inverse, const Mat& alphas, std::span<const char> skip,
                   std::span<double> gains);
}

// Batched 2PL probabilities: out(q, m) = sigmoid(alpha_q . (theta_m - b_q)).
// alphas, bs are queries x D, thetas is models x D.
namespace serial {
void prob_matrix(const Mat& alphas, const Mat& bs, const Mat& thetas, Mat& out);
}
namespace omp {
void prob_matrix(const Mat& alphas, const Mat& bs, const Mat& thetas, Mat& out);
}

}  // namespace latroute::kernels
