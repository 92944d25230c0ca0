#include "latroute/kernels.hpp"

#include "latroute/irt.hpp"

#include <cmath>
#include <limits>

namespace latroute::kernels {

namespace {

void resize_like(const IrtParams& params, IrtGradient& out) {
  out.theta.setZero(params.theta.rows(), params.theta.cols());
  out.raw_alpha.setZero(params.raw_alpha.rows(), params.raw_alpha.cols());
  out.b.setZero(params.b.rows(), params.b.cols());
  out.data_loss = 0.0;
}

Mat softplus_of(const Mat& raw) { return raw.unaryExpr([](double x) { return softplus(x); }); }

}  // namespace

// ---------------------------------------------------------------------------
// serial reference

namespace serial {

void irt_loss_grad(const Mat& scores, const Mask& present, const IrtParams& params,
                   IrtGradient& out) {
  const Eigen::Index models = scores.rows();
  const Eigen::Index items = scores.cols();
  const Eigen::Index dim = params.theta.cols();
  resize_like(params, out);
  const Mat alpha = softplus_of(params.raw_alpha);

  Mat residual = Mat::Zero(models, items);
  std::vector<double> row_loss(static_cast<std::size_t>(models), 0.0);
  for (Eigen::Index u = 0; u < models; ++u) {
    for (Eigen::Index i = 0; i < items; ++i) {
      if (!present(u, i)) continue;
      double z = 0.0;
      for (Eigen::Index d = 0; d < dim; ++d) z += alpha(i, d) * (params.theta(u, d) - params.b(i, d));
      const double y = scores(u, i);
      residual(u, i) = sigmoid(z) - y;
      row_loss[static_cast<std::size_t>(u)] += bce_logit(y, z);
    }
  }
  for (Eigen::Index u = 0; u < models; ++u) {
    for (Eigen::Index d = 0; d < dim; ++d) {
      double g = 0.0;
      for (Eigen::Index i = 0; i < items; ++i) g += residual(u, i) * alpha(i, d);
      out.theta(u, d) = g;
    }
  }
  for (Eigen::Index i = 0; i < items; ++i) {
    double sum_r = 0.0;
    for (Eigen::Index u = 0; u < models; ++u) sum_r += residual(u, i);
    for (Eigen::Index d = 0; d < dim; ++d) {
      double r_theta = 0.0;
      for (Eigen::Index u = 0; u < models; ++u) r_theta += residual(u, i) * params.theta(u, d);
      const double g_alpha = r_theta - params.b(i, d) * sum_r;
      out.raw_alpha(i, d) = g_alpha * sigmoid(params.raw_alpha(i, d));
      out.b(i, d) = -alpha(i, d) * sum_r;
    }
  }
  for (double l : row_loss) out.data_loss += l;
}

double irt_loss(const Mat& scores, const Mask& present, const IrtParams& params) {
  const Mat alpha = softplus_of(params.raw_alpha);
  double total = 0.0;
  for (Eigen::Index u = 0; u < scores.rows(); ++u) {
    double row = 0.0;
    for (Eigen::Index i = 0; i < scores.cols(); ++i) {
      if (!present(u, i)) continue;
      double z = 0.0;
      for (Eigen::Index d = 0; d < alpha.cols(); ++d) z += alpha(i, d) * (params.theta(u, d) - params.b(i, d));
      row += bce_logit(scores(u, i), z);
    }
    total += row;
  }
  return total;
}

void log_det_gains(const Mat& inverse, const Mat& alphas, std::span<const char> skip,
                   std::span<double> gains) {
  for (Eigen::Index i = 0; i < alphas.rows(); ++i) {
    if (skip[static_cast<std::size_t>(i)]) {
      gains[static_cast<std::size_t>(i)] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const Vec a = alphas.row(i).transpose();
    gains[static_cast<std::size_t>(i)] = std::log1p(a.dot(inverse * a));
  }
}

void prob_matrix(const Mat& alphas, const Mat& bs, const Mat& thetas, Mat& out) {
  out.resize(alphas.rows(), thetas.rows());
  for (Eigen::Index q = 0; q < alphas.rows(); ++q) {
    for (Eigen::Index m = 0; m < thetas.rows(); ++m) {
      double z = 0.0;
      for (Eigen::Index d = 0; d < alphas.cols(); ++d) z += alphas(q, d) * (thetas(m, d) - bs(q, d));
      out(q, m) = sigmoid(z);
    }
  }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP

namespace omp {

void irt_loss_grad(const Mat& scores, const Mask& present, const IrtParams& params,
                   IrtGradient& out) {
  const Eigen::Index models = scores.rows();
  const Eigen::Index items = scores.cols();
  const Eigen::Index dim = params.theta.cols();
  resize_like(params, out);
  const Mat alpha = softplus_of(params.raw_alpha);

  Mat residual = Mat::Zero(models, items);
  std::vector<double> row_loss(static_cast<std::size_t>(models), 0.0);

  // Rows own their residuals and their theta gradient.
#pragma omp parallel for schedule(static)
  for (Eigen::Index u = 0; u < models; ++u) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < items; ++i) {
      if (!present(u, i)) continue;
      double z = 0.0;
      for (Eigen::Index d = 0; d < dim; ++d) z += alpha(i, d) * (params.theta(u, d) - params.b(i, d));
      const double y = scores(u, i);
      residual(u, i) = sigmoid(z) - y;
      loss += bce_logit(y, z);
    }
    row_loss[static_cast<std::size_t>(u)] = loss;
    for (Eigen::Index d = 0; d < dim; ++d) {
      double g = 0.0;
      for (Eigen::Index i = 0; i < items; ++i) g += residual(u, i) * alpha(i, d);
      out.theta(u, d) = g;
    }
  }

  // Columns own their item gradients.
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < items; ++i) {
    double sum_r = 0.0;
    for (Eigen::Index u = 0; u < models; ++u) sum_r += residual(u, i);
    for (Eigen::Index d = 0; d < dim; ++d) {
      double r_theta = 0.0;
      for (Eigen::Index u = 0; u < models; ++u) r_theta += residual(u, i) * params.theta(u, d);
      const double g_alpha = r_theta - params.b(i, d) * sum_r;
      out.raw_alpha(i, d) = g_alpha * sigmoid(params.raw_alpha(i, d));
      out.b(i, d) = -alpha(i, d) * sum_r;
    }
  }
  for (double l : row_loss) out.data_loss += l;
}

double irt_loss(const Mat& scores, const Mask& present, const IrtParams& params) {
  const Mat alpha = softplus_of(params.raw_alpha);
  std::vector<double> row_loss(static_cast<std::size_t>(scores.rows()), 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index u = 0; u < scores.rows(); ++u) {
    double row = 0.0;
    for (Eigen::Index i = 0; i < scores.cols(); ++i) {
      if (!present(u, i)) continue;
      double z = 0.0;
      for (Eigen::Index d = 0; d < alpha.cols(); ++d) z += alpha(i, d) * (params.theta(u, d) - params.b(i, d));
      row += bce_logit(scores(u, i), z);
    }
    row_loss[static_cast<std::size_t>(u)] = row;
  }
  double total = 0.0;
  for (double l : row_loss) total += l;
  return total;
}

void log_det_gains(const Mat& inverse, const Mat& alphas, std::span<const char> skip,
                   std::span<double> gains) {
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < alphas.rows(); ++i) {
    if (skip[static_cast<std::size_t>(i)]) {
      gains[static_cast<std::size_t>(i)] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const Vec a = alphas.row(i).transpose();
    gains[static_cast<std::size_t>(i)] = std::log1p(a.dot(inverse * a));
  }
}

void prob_matrix(const Mat& alphas, const Mat& bs, const Mat& thetas, Mat& out) {
  out.resize(alphas.rows(), thetas.rows());
#pragma omp parallel for schedule(static)
  for (Eigen::Index q = 0; q < alphas.rows(); ++q) {
    for (Eigen::Index m = 0; m < thetas.rows(); ++m) {
      double z = 0.0;
      for (Eigen::Index d = 0; d < alphas.cols(); ++d) z += alphas(q, d) * (thetas(m, d) - bs(q, d));
      out(q, m) = sigmoid(z);
    }
  }
}

}  // namespace omp

}  // namespace latroute::kernels
