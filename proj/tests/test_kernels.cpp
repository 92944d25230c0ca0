#include "latroute/kernels.hpp"

#include <doctest.h>
#include <omp.h>

#include <cmath>
#include <random>

using namespace latroute;

namespace {

struct Fixture {
  Mat scores;
  kernels::Mask present;
  kernels::IrtParams params;
};

Fixture make(int models, int items, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  Fixture f;
  f.scores.resize(models, items);
  f.present.resize(models, items);
  for (int m = 0; m < models; ++m)
    for (int i = 0; i < items; ++i) {
      f.scores(m, i) = unit(rng);
      f.present(m, i) = unit(rng) < 0.8;
    }
  auto fill = [&](Mat& x, int rows) {
    x.resize(rows, dim);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = normal(rng);
  };
  fill(f.params.theta, models);
  fill(f.params.raw_alpha, items);
  fill(f.params.b, items);
  return f;
}

bool bitwise_equal(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data(), a.data() + a.size(), b.data());
}

}  // namespace

TEST_CASE("irt_loss_grad: omp matches serial bitwise for any thread count") {
  const auto f = make(37, 91, 4, 1);
  kernels::IrtGradient ref;
  kernels::serial::irt_loss_grad(f.scores, f.present, f.params, ref);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 8}) {
    omp_set_num_threads(threads);
    kernels::IrtGradient g;
    kernels::omp::irt_loss_grad(f.scores, f.present, f.params, g);
    CHECK(g.data_loss == ref.data_loss);
    CHECK(bitwise_equal(g.theta, ref.theta));
    CHECK(bitwise_equal(g.raw_alpha, ref.raw_alpha));
    CHECK(bitwise_equal(g.b, ref.b));
    CHECK(kernels::omp::irt_loss(f.scores, f.present, f.params) ==
          kernels::serial::irt_loss(f.scores, f.present, f.params));
  }
  omp_set_num_threads(saved);
  CHECK(ref.data_loss == kernels::serial::irt_loss(f.scores, f.present, f.params));
}

TEST_CASE("irt_loss_grad matches central differences") {
  auto f = make(5, 7, 3, 2);
  kernels::IrtGradient g;
  kernels::serial::irt_loss_grad(f.scores, f.present, f.params, g);
  const double h = 1e-6;
  auto check_block = [&](Mat& param, const Mat& grad) {
    for (Eigen::Index k = 0; k < param.size(); ++k) {
      const double keep = param.data()[k];
      param.data()[k] = keep + h;
      const double up = kernels::serial::irt_loss(f.scores, f.present, f.params);
      param.data()[k] = keep - h;
      const double down = kernels::serial::irt_loss(f.scores, f.present, f.params);
      param.data()[k] = keep;
      const double numeric = (up - down) / (2 * h);
      CHECK(grad.data()[k] == doctest::Approx(numeric).epsilon(1e-5).scale(1.0));
    }
  };
  check_block(f.params.theta, g.theta);
  check_block(f.params.raw_alpha, g.raw_alpha);
  check_block(f.params.b, g.b);
}

TEST_CASE("log_det_gains: omp matches serial and the closed form") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  const int dim = 5, n = 301;
  Mat alphas(n, dim);
  for (Eigen::Index k = 0; k < alphas.size(); ++k) alphas.data()[k] = std::abs(normal(rng));
  Mat a(dim, dim);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = normal(rng);
  const Mat inverse = (a * a.transpose() + Mat::Identity(dim, dim)).inverse();
  std::vector<char> skip(n, 0);
  skip[7] = skip[100] = 1;
  std::vector<double> serial(n), parallel(n);
  kernels::serial::log_det_gains(inverse, alphas, skip, serial);
  kernels::omp::log_det_gains(inverse, alphas, skip, parallel);
  CHECK(serial == parallel);
  CHECK(std::isinf(serial[7]));
  CHECK(serial[7] < 0);
  const Vec row = alphas.row(3).transpose();
  CHECK(serial[3] == doctest::Approx(std::log1p(row.dot(inverse * row))).epsilon(1e-14));
}

TEST_CASE("prob_matrix: omp matches serial and predict_prob's formula") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  const int dim = 4;
  Mat alphas(33, dim), bs(33, dim), thetas(6, dim);
  for (Mat* m : {&alphas, &bs, &thetas})
    for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] = normal(rng);
  alphas = alphas.cwiseAbs();
  Mat s, p;
  kernels::serial::prob_matrix(alphas, bs, thetas, s);
  kernels::omp::prob_matrix(alphas, bs, thetas, p);
  CHECK(bitwise_equal(s, p));
  const double z = alphas.row(5).dot(thetas.row(2) - bs.row(5));
  CHECK(s(5, 2) == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-14));
}
