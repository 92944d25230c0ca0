#include "helpers.hpp"
#include "latroute/predictor.hpp"
#include "latroute/serialize.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace latroute;
using latroute::testing::random_vec;
using latroute::testing::vec;

namespace {

ClusterAssignment fixed_clusters(std::vector<std::vector<int>> groups, int dim) {
  ClusterAssignment c;
  c.clusters = std::move(groups);
  c.abs_correlation = Mat::Identity(dim, dim);
  return c;
}

PredictorModel tiny_model(std::uint64_t seed) {
  PredictorShape shape{4, 3, 5, 2, 4};
  auto m = PredictorModel::create(shape, fixed_clusters({{0, 2}, {1}}, 3), seed);
  m.mean_b = vec({0.1, -0.2, 0.3});
  std::mt19937_64 rng(seed + 1);
  // Non-zero biases so no unit sits exactly on a ReLU kink.
  for (const auto& blk : m.blocks)
    if (blk.cols == 1)
      for (std::size_t i = 0; i < blk.size(); ++i) m.params[blk.offset + i] = 0.1 * random_vec(rng, 1)(0);
  return m;
}

FeatureVector random_features(std::mt19937_64& rng, int d_sem) {
  return {random_vec(rng, d_sem), random_vec(rng, static_cast<int>(kStructuralFeatures))};
}

std::vector<TrainingExample> random_examples(std::mt19937_64& rng, int n, int d_sem, int dim) {
  std::vector<TrainingExample> out;
  for (int k = 0; k < n; ++k) {
    TrainingExample ex;
    ex.query_id = "q" + std::to_string(k);
    ex.features = random_features(rng, d_sem);
    ex.alpha = random_vec(rng, dim).cwiseAbs();
    ex.b = random_vec(rng, dim);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TEST_CASE("cluster_dimensions groups correlated columns") {
  Mat a(5, 3);
  a << 1, 2, 0.3,  //
      2, 4, -1.0,  //
      3, 6, 0.7,   //
      4, 8, 0.1,   //
      5, 10, -0.4;
  const auto c = cluster_dimensions(a, 2);
  REQUIRE(c.size() == 2);
  CHECK(c.clusters[0] == std::vector<int>{0, 1});
  CHECK(c.clusters[1] == std::vector<int>{2});
  CHECK(c.abs_correlation(0, 1) == doctest::Approx(1.0));
  CHECK(c.constant_dims.empty());
  CHECK(cluster_dimensions(a, 3).size() == 3);
  CHECK(cluster_dimensions(a, 1).clusters[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("cluster_dimensions reports constant columns") {
  Mat a(4, 3);
  a << 1, 0.5, 2,  //
      2, 0.5, 1,   //
      3, 0.5, 4,   //
      4, 0.5, 3;
  const auto c = cluster_dimensions(a, 3);
  CHECK(c.constant_dims == std::vector<int>{1});
  CHECK(c.abs_correlation(0, 1) == 0.0);
  CHECK(c.abs_correlation(1, 2) == 0.0);
}

TEST_CASE("cluster_dimensions rejects bad arguments") {
  Mat a = Mat::Ones(3, 2);
  CHECK_THROWS_AS(cluster_dimensions(a, 0), Error);
  CHECK_THROWS_AS(cluster_dimensions(a, 3), Error);
  CHECK_THROWS_AS(cluster_dimensions(Mat::Ones(1, 2), 1), Error);
}

TEST_CASE("property: clustering ignores item order") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Mat a(30, 6);
    for (int r = 0; r < 30; ++r) a.row(r) = random_vec(rng, 6).cwiseAbs().transpose();
    a.col(3) = 2.0 * a.col(0) + 0.01 * a.col(5);
    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Mat b(30, 6);
    for (int r = 0; r < 30; ++r) b.row(r) = a.row(perm[static_cast<std::size_t>(r)]);
    const int count = 1 + trial % 6;
    CHECK(cluster_dimensions(a, count).clusters == cluster_dimensions(b, count).clusters);
  }
}

TEST_CASE("zero network predicts mean difficulty and ln 2 discrimination") {
  auto m = tiny_model(1);
  std::fill(m.params.begin(), m.params.end(), 0.0);
  std::mt19937_64 rng(2);
  const auto p = forward(m, random_features(rng, 4));
  for (int d = 0; d < 3; ++d) {
    CHECK(p.b(d) == doctest::Approx(m.mean_b(d)).epsilon(1e-15));
    CHECK(p.alpha(d) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  }
}

TEST_CASE("property: outputs are finite and discrimination positive") {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PredictorShape shape{8, 6, 16, 2, 8};
    const auto m = PredictorModel::create(shape, fixed_clusters({{0, 3}, {1, 2, 5}, {4}}, 6), seed);
    for (int k = 0; k < 20; ++k) {
      const auto p = forward(m, random_features(rng, 8));
      CHECK(p.b.allFinite());
      CHECK(p.alpha.allFinite());
      CHECK((p.alpha.array() > 0.0).all());
    }
  }
}

TEST_CASE("forward rejects wrong feature sizes") {
  const auto m = tiny_model(1);
  CHECK_THROWS_AS(forward(m, {Vec::Zero(3), Vec::Zero(kStructuralFeatures)}), DimensionError);
  CHECK_THROWS_AS(forward(m, {Vec::Zero(4), Vec::Zero(3)}), DimensionError);
}

TEST_CASE("analytic gradient matches central differences") {
  auto m = tiny_model(7);
  std::mt19937_64 rng(8);
  const auto batch = random_examples(rng, 5, 4, 3);
  std::vector<double> grad;
  batch_loss(m, batch, 0.7, &grad);

  std::vector<double> numeric(m.params.size());
  const double h = 1e-6;
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const double keep = m.params[i];
    m.params[i] = keep + h;
    const double up = batch_loss(m, batch, 0.7, nullptr);
    m.params[i] = keep - h;
    const double down = batch_loss(m, batch, 0.7, nullptr);
    m.params[i] = keep;
    numeric[i] = (up - down) / (2.0 * h);
  }
  const Eigen::Map<const Vec> ga(grad.data(), static_cast<Eigen::Index>(grad.size()));
  const Eigen::Map<const Vec> gn(numeric.data(), static_cast<Eigen::Index>(numeric.size()));
  CHECK((ga - gn).norm() / std::max(gn.norm(), 1e-12) <= 1e-4);
  for (std::size_t i = 0; i < grad.size(); ++i) CHECK(grad[i] == doctest::Approx(numeric[i]).epsilon(1e-4).scale(1e-6));
}

TEST_CASE("parallel batch loss equals serial") {
  const auto m = tiny_model(9);
  std::mt19937_64 rng(10);
  const auto batch = random_examples(rng, 17, 4, 3);
  std::vector<double> g1, g2;
  const double l1 = batch_loss(m, batch, 1.0, &g1, false);
  const double l2 = batch_loss(m, batch, 1.0, &g2, true);
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}

TEST_CASE("difficulty head is a residual on mean_b") {
  auto m = tiny_model(11);
  std::mt19937_64 rng(12);
  const auto f = random_features(rng, 4);
  const auto before = forward(m, f);
  m.view("diff1.W").setZero();
  m.view("diff1.b").setZero();
  const auto after = forward(m, f);
  CHECK((after.b - m.mean_b).norm() == 0.0);
  CHECK(after.alpha == before.alpha);
}

TEST_CASE("expert heads only drive their own dimensions") {
  auto m = tiny_model(13);
  std::mt19937_64 rng(14);
  const auto f = random_features(rng, 4);
  const auto before = forward(m, f);
  m.view("expert1.1.b").array() += 1.0;  // cluster {1}
  const auto after = forward(m, f);
  CHECK(after.b == before.b);
  CHECK(after.alpha(0) == before.alpha(0));
  CHECK(after.alpha(2) == before.alpha(2));
  CHECK(after.alpha(1) > before.alpha(1));
}

TEST_CASE("feature scaler statistics") {
  const auto s = FeatureScaler::fit({vec({1, 5, 2}), vec({3, 5, 2}), vec({5, 5, 8})});
  CHECK(s.mean(0) == doctest::Approx(3.0));
  CHECK(s.stddev(0) == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(s.stddev(1) == 0.0);
  CHECK(s.mean(2) == doctest::Approx(4.0));
  const Vec z = s.apply(vec({3, 7, 4}));
  CHECK(z(0) == 0.0);
  CHECK(z(1) == 0.0);
  CHECK(z(2) == 0.0);
  CHECK_THROWS_AS(s.apply(vec({1, 2})), DimensionError);
  CHECK_THROWS_AS(FeatureScaler::fit({}), Error);
}

TEST_CASE("training memorises a handful of examples") {
  std::mt19937_64 rng(15);
  const auto examples = random_examples(rng, 4, 8, 3);
  TrainConfig cfg;
  cfg.epochs = 1500;
  cfg.batch_size = 4;
  cfg.learning_rate = 3e-3;
  cfg.clusters = 2;
  cfg.trunk_width = 32;
  cfg.head_width = 16;
  cfg.parallel = false;
  const auto m = train(examples, CalibratedSpace{3, {}, {}, {}}, cfg);
  CHECK(m.loss_history.back() < 1e-3);
  CHECK(m.num_clusters() == 2);
}

TEST_CASE("constant difficulty sets mean_b") {
  std::mt19937_64 rng(16);
  auto examples = random_examples(rng, 6, 4, 2);
  for (auto& ex : examples) ex.b = vec({0.25, -1.5});
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.clusters = 1;
  cfg.trunk_width = 8;
  cfg.head_width = 4;
  const auto m = train(examples, CalibratedSpace{2, {}, {}, {}}, cfg);
  CHECK(m.mean_b(0) == doctest::Approx(0.25));
  CHECK(m.mean_b(1) == doctest::Approx(-1.5));
}

TEST_CASE("training recovers a linear map from features") {
  std::mt19937_64 rng(17);
  const int d_sem = 8, dim = 2;
  const Mat w = Mat::NullaryExpr(dim, d_sem, [&] { return random_vec(rng, 1)(0); });
  auto make = [&](int n) {
    auto ex = random_examples(rng, n, d_sem, dim);
    for (auto& e : ex) {
      e.b = w * e.features.semantic;
      e.alpha = vec({1.0, 1.0});
    }
    return ex;
  };
  const auto train_set = make(400);
  const auto test_set = make(100);
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 32;
  cfg.learning_rate = 3e-3;
  cfg.clusters = 1;
  cfg.trunk_width = 64;
  cfg.head_width = 32;
  const auto m = train(train_set, CalibratedSpace{dim, {}, {}, {}}, cfg);
  double ss_res = 0.0, ss_tot = 0.0;
  Vec mean = Vec::Zero(dim);
  for (const auto& e : test_set) mean += e.b;
  mean /= static_cast<double>(test_set.size());
  for (const auto& e : test_set) {
    ss_res += (forward(m, e.features).b - e.b).squaredNorm();
    ss_tot += (e.b - mean).squaredNorm();
  }
  const double r2 = 1.0 - ss_res / ss_tot;
  MESSAGE("held-out R^2 = " << r2);
  CHECK(r2 >= 0.8);
}

TEST_CASE("train rejects bad input") {
  std::mt19937_64 rng(18);
  auto examples = random_examples(rng, 3, 4, 2);
  TrainConfig cfg;
  CHECK_THROWS_AS(train({}, CalibratedSpace{2, {}, {}, {}}, cfg), Error);
  CHECK_THROWS_AS(train(examples, CalibratedSpace{3, {}, {}, {}}, cfg), DimensionError);
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(examples, CalibratedSpace{2, {}, {}, {}}, cfg), Error);
}

TEST_CASE("predictor JSON round trip") {
  auto m = tiny_model(19);
  m.loss_history = {0.5, 0.25};
  std::mt19937_64 srng(1);
  m.scaler = FeatureScaler::fit({random_vec(srng, 11), Vec::Ones(11)});
  const auto j = to_json(m);
  CHECK(j.at("format") == "latroute-predictor");
  const auto back = predictor_from_json(Json::parse(j.dump()));
  CHECK(back.params == m.params);
  CHECK(back.clusters.clusters == m.clusters.clusters);
  CHECK(back.loss_history == m.loss_history);
  std::mt19937_64 rng(20);
  for (int k = 0; k < 5; ++k) {
    const auto f = random_features(rng, 4);
    CHECK(forward(back, f).alpha == forward(m, f).alpha);
    CHECK(forward(back, f).b == forward(m, f).b);
  }

  auto bad = j;
  bad["format"] = "something-else";
  CHECK_THROWS_AS(predictor_from_json(bad), Error);
  bad = j;
  bad["params"].erase(0);
  CHECK_THROWS_AS(predictor_from_json(bad), Error);
}
