#include "helpers.hpp"
#include "latroute/irt.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

using namespace latroute;
using latroute::testing::vec;

namespace {

CalibratedSpace space_of(std::vector<ItemParams> items) {
  CalibratedSpace s;
  s.dim = static_cast<int>(items.front().alpha.size());
  for (auto& it : items) s.items[it.item_id] = std::move(it);
  return s;
}

// Minimiser of the profiling objective over a 1-D grid with step h.
double grid_argmin(const std::vector<ProfilingObservation>& obs, const CalibratedSpace& space,
                   const CalibrationConfig& cfg, double lo, double hi, double h) {
  double best = lo, best_loss = INFINITY;
  for (double t = lo; t <= hi; t += h) {
    const double l = profile_loss(vec({t}), obs, space, cfg);
    if (l < best_loss) {
      best_loss = l;
      best = t;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("predict_prob examples") {
  const ItemParams item{"i", vec({1.0, 2.0}), vec({0.0, 0.0})};
  CHECK(predict_prob(vec({0.0, 0.0}), item.alpha, item.b) == 0.5);
  CHECK(predict_prob(vec({3.0, -1.0}), vec({0.0, 0.0}), vec({7.0, 2.0})) == 0.5);
  // sigmoid(1*1 + 2*1) = sigmoid(3)
  CHECK(predict_prob(vec({1.0, 1.0}), item.alpha, item.b) == doctest::Approx(0.9525741268224334).epsilon(1e-14));
}

TEST_CASE("predict_prob stays strictly inside (0, 1)") {
  const double hi = predict_prob(vec({1000.0}), vec({5.0}), vec({0.0}));
  const double lo = predict_prob(vec({-1000.0}), vec({5.0}), vec({0.0}));
  CHECK(hi < 1.0);
  CHECK(lo > 0.0);
}

TEST_CASE("predict_prob dimension mismatch names both lengths") {
  try {
    predict_prob(vec({1.0, 2.0}), vec({1.0, 2.0, 3.0}), vec({0.0, 0.0}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(e.expected() == 2);
    CHECK(e.actual() == 3);
    CHECK(std::string(e.what()).find("2") != std::string::npos);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("predict_prob is monotone in theta and reflection symmetric about b") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> step(0.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int dim = 1 + trial % 5;
    const auto item = latroute::testing::random_item(rng, dim, "i");
    const Vec theta = latroute::testing::random_vec(rng, dim, 2.0);
    const int d = trial % dim;
    Vec moved = theta;
    moved(d) += step(rng);
    if (item.alpha(d) > 0.0) CHECK(predict_prob(moved, item.alpha, item.b) >= predict_prob(theta, item.alpha, item.b));
    const Vec mirror = 2.0 * item.b - theta;
    CHECK(predict_prob(theta, item.alpha, item.b) + predict_prob(mirror, item.alpha, item.b) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("bce clamps probabilities") {
  CHECK(bce(1.0, 0.0) == doctest::Approx(16.11809565095832).epsilon(1e-12));
  CHECK(bce(0.0, 1.0) == doctest::Approx(16.11809565095832).epsilon(1e-9));
  CHECK(bce(0.5, 0.5) == doctest::Approx(std::log(2.0)));
  // logit form agrees with the clamped one away from the clamp
  for (double z : {-3.0, -0.2, 0.0, 1.5, 4.0})
    for (double y : {0.0, 0.3, 1.0}) CHECK(bce_logit(y, z) == doctest::Approx(bce(y, sigmoid(z))).epsilon(1e-12));
}

TEST_CASE("fit_calibration single cell pulls toward the observation") {
  ResponseMatrix r({"m"}, {"i"});
  r.set(0, 0, 1.0);
  CalibrationConfig cfg;
  cfg.dim = 1;
  cfg.epochs = 500;
  const auto space = fit_calibration(r, cfg);
  CHECK(predict_prob(space.abilities.at("m"), space.items.at("i")) > 0.5);
}

TEST_CASE("fit_calibration errors") {
  CalibrationConfig cfg;
  cfg.dim = 2;
  CHECK_THROWS_AS(fit_calibration(ResponseMatrix({}, {}), cfg), Error);
  ResponseMatrix missing({"a", "b"}, {"x", "y"});
  missing.set(0, 0, 1.0);
  missing.set(0, 1, 0.0);
  CHECK_THROWS_WITH_AS(fit_calibration(missing, cfg), doctest::Contains("'b'"), Error);
  ResponseMatrix bad({"a"}, {"x"});
  bad.set(0, 0, 1.5);
  CHECK_THROWS_AS(fit_calibration(bad, cfg), Error);
  cfg.dim = 0;
  ResponseMatrix ok({"a"}, {"x"});
  ok.set(0, 0, 1.0);
  CHECK_THROWS_AS(fit_calibration(ok, cfg), Error);
}

TEST_CASE("fit_calibration is deterministic, monotone at checkpoints and independent of the kernel backend") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit;
  std::vector<std::string> models, items;
  for (int m = 0; m < 12; ++m) models.push_back("m" + std::to_string(m));
  for (int i = 0; i < 40; ++i) items.push_back("i" + std::to_string(i));
  ResponseMatrix r(models, items);
  for (std::size_t m = 0; m < models.size(); ++m)
    for (std::size_t i = 0; i < items.size(); ++i)
      if (unit(rng) < 0.85) r.set(m, i, unit(rng) < 0.6 ? 1.0 : unit(rng));
  CalibrationConfig cfg;
  cfg.dim = 3;
  cfg.epochs = 1500;
  cfg.seed = 9;
  const auto a = fit_calibration(r, cfg);
  const auto b = fit_calibration(r, cfg);
  CHECK(a.fit_report.final_loss == b.fit_report.final_loss);
  REQUIRE(a.fit_report.checkpoints.size() >= 2);
  for (std::size_t k = 1; k < a.fit_report.checkpoints.size(); ++k)
    CHECK(a.fit_report.checkpoints[k] <= a.fit_report.checkpoints[k - 1] + 1e-9);
  CHECK(std::isfinite(a.fit_report.final_loss));
  CHECK(a.fit_report.seed == 9);

  cfg.parallel = false;
  const auto s = fit_calibration(r, cfg);
  CHECK(s.fit_report.final_loss == a.fit_report.final_loss);
  CHECK(s.abilities.at("m3").theta == a.abilities.at("m3").theta);
  for (const auto& [id, item] : a.items) CHECK((item.alpha.array() >= 0.0).all());
}

TEST_CASE("profile_new_model at a symmetric point returns the prior mean") {
  const Vec mu = vec({0.3, -0.2});
  auto space = space_of({{"a", vec({1.0, 0.5}), mu}, {"b", vec({0.2, 1.5}), mu}, {"c", vec({0.7, 0.7}), mu}});
  CalibrationConfig cfg;
  cfg.dim = 2;
  cfg.prior_mean = mu;
  const auto theta = profile_new_model({{"a", 0.5}, {"b", 0.5}, {"c", 0.5}}, space, cfg).theta;
  CHECK(std::abs(theta(0) - mu(0)) <= 1e-3);
  CHECK(std::abs(theta(1) - mu(1)) <= 1e-3);
}

TEST_CASE("profile_new_model errors") {
  auto space = space_of({{"a", vec({1.0}), vec({0.0})}});
  CalibrationConfig cfg;
  cfg.dim = 1;
  CHECK_THROWS_AS(profile_new_model({}, space, cfg), Error);
  CHECK_THROWS_WITH_AS(profile_new_model({{"zzz", 1.0}}, space, cfg), doctest::Contains("zzz"), Error);
  CHECK_THROWS_AS(profile_new_model({{"a", 2.0}}, space, cfg), Error);
}

TEST_CASE("profile_new_model reaches first-order optimality") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit;
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = 1 + trial % 5;
    std::vector<ItemParams> items;
    std::vector<ProfilingObservation> obs;
    for (int i = 0; i < 12; ++i) {
      items.push_back(latroute::testing::random_item(rng, dim, "i" + std::to_string(i)));
      obs.push_back({items.back().item_id, unit(rng)});
    }
    const auto space = space_of(items);
    CalibrationConfig cfg;
    cfg.dim = dim;
    const auto theta = profile_new_model(obs, space, cfg).theta;
    CHECK(profile_gradient(theta, obs, space, cfg).norm() <= cfg.profile_tolerance);
  }
}

TEST_CASE("profile_new_model matches a dense grid search in one dimension") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ItemParams> items;
    std::vector<ProfilingObservation> obs;
    const int n = 1 + trial % 5;
    for (int i = 0; i < n; ++i) {
      items.push_back(latroute::testing::random_item(rng, 1, "i" + std::to_string(i)));
      obs.push_back({items.back().item_id, trial % 3 == 0 ? (unit(rng) < 0.5 ? 0.0 : 1.0) : unit(rng)});
    }
    const auto space = space_of(items);
    CalibrationConfig cfg;
    cfg.dim = 1;
    const double theta = profile_new_model(obs, space, cfg).theta(0);
    CHECK(std::abs(theta - grid_argmin(obs, space, cfg, -8.0, 8.0, 1e-3)) <= 2e-3);
  }
}

TEST_CASE("all-correct answers on easy items move theta above the prior mean") {
  auto space = space_of({{"e1", vec({1.2}), vec({-3.0})}, {"e2", vec({0.8}), vec({-4.0})}, {"e3", vec({2.0}), vec({-2.5})}});
  CalibrationConfig cfg;
  cfg.dim = 1;
  const std::vector<ProfilingObservation> obs{{"e1", 1.0}, {"e2", 1.0}, {"e3", 1.0}};
  const double theta = profile_new_model(obs, space, cfg).theta(0);
  CHECK(theta >= 0.0);
  CHECK(std::abs(theta - grid_argmin(obs, space, cfg, -8.0, 8.0, 1e-3)) <= 2e-3);
}

TEST_CASE("response CSV round trip keeps missing cells") {
  latroute::testing::TempDir dir("irt");
  ResponseMatrix r({"m1", "m2"}, {"x", "y", "z"});
  r.set(0, 0, 1.0);
  r.set(0, 2, 0.25);
  r.set(1, 1, 0.0);
  r.set(1, 2, 0.125);
  write_response_csv(r, dir.file("r.csv"));
  const auto back = read_response_csv(dir.file("r.csv"));
  CHECK(back.models == r.models);
  CHECK(back.items == r.items);
  CHECK(back.present == r.present);
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 3; ++i)
      if (r.present(m, i)) CHECK(back.scores(m, i) == r.scores(m, i));
}

TEST_CASE("response CSV rejects bad cells") {
  latroute::testing::TempDir dir("irt-bad");
  std::ofstream(dir.file("bad.csv")) << "model_id,x\nm1,abc\n";
  CHECK_THROWS_AS(read_response_csv(dir.file("bad.csv")), Error);
  std::ofstream(dir.file("long.csv")) << "model_id,x,y\nm1,1,0,1\n";
  CHECK_THROWS_AS(read_response_csv(dir.file("long.csv")), Error);
  // a short row leaves its trailing cells missing
  std::ofstream(dir.file("short.csv")) << "model_id,x,y\nm1,1\n";
  const auto r = read_response_csv(dir.file("short.csv"));
  CHECK(r.present(0, 0));
  CHECK_FALSE(r.present(0, 1));
}
