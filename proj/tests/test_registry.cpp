#include "registry_fixture.hpp"
#include "latroute/router.hpp"
#include "latroute/serialize.hpp"

#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

using namespace latroute;
using namespace latroute::testing;

TEST_CASE("a registered model is routable straight away") {
  auto r = fixture_registry(false);
  auto c = simple_profile("m-c", vec({3.0, 3.0}), 1e-5, 1e-5);
  r = register_model(r, c);
  const std::vector<QueryInput> q{{"q", {"q", vec({1.0, 1.0}), vec({0.0, 0.0})}, "hello there"}};
  const auto e = score_matrix(q, r.profile_list(), TokenizerRegistry{}, false);
  CHECK(e.num_models() == 3);
  CHECK(route_unconstrained(e, presets::kMaxAccuracy).choices[0].model_id == "m-c");
}

TEST_CASE("dimension mismatch is rejected with both sizes in the message") {
  auto r = fixture_registry(false);
  const auto before = r.version;
  try {
    register_model(r, simple_profile("m-3d", vec({1.0, 2.0, 3.0})));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("D=3") != std::string::npos);
    CHECK(msg.find("D=2") != std::string::npos);
  }
  CHECK(r.version == before);
  CHECK_THROWS_AS(register_model(Registry{}, simple_profile("m", vec({1.0}))), Error);
}

TEST_CASE("versions increase by one per change") {
  auto r = fixture_registry(false);
  const auto start = r.version;
  CHECK(start == 3);
  for (int k = 0; k < 50; ++k) {
    r = register_model(r, simple_profile("extra-" + std::to_string(k), vec({0.1 * k, 0.0})));
    CHECK(r.version == start + static_cast<std::uint64_t>(k) + 1);
  }
  CHECK(r.profiles.size() == 52);
}

TEST_CASE("duplicates need overwrite") {
  auto r = fixture_registry(false);
  auto p = simple_profile("m-a", vec({2.0, 2.0}));
  CHECK_THROWS_AS(register_model(r, p), Error);
  r = register_model(r, p, true);
  CHECK(r.profiles.at("m-a").ability.theta(0) == 2.0);
  p.model_id = "m-z";
  p.metadata.anchor_set_id = "missing";
  CHECK_THROWS_AS(register_model(r, p), Error);
}

TEST_CASE("anchor sets and predictor are checked against the space") {
  auto r = fixture_registry(false);
  CHECK_THROWS_AS(add_anchor_set(r, "bad", AnchorSet{{"i0", "nope"}, {0.1, 0.1}, 1e-6, 2}), Error);
  CHECK_THROWS_AS(add_anchor_set(r, "bad", AnchorSet{{"i0"}, {0.1}, 1e-6, 3}), DimensionError);
  ClusterAssignment c;
  c.clusters = {{0, 1, 2}};
  auto wrong = PredictorModel::create({16, 3, 8, 1, 4}, c, 1);
  CHECK_THROWS_AS(set_predictor(r, wrong), DimensionError);
}

TEST_CASE("save and load round trip") {
  TempDir dir("registry");
  auto r = fixture_registry(true);
  // An id that is unsafe as a file name must still survive.
  r = register_model(r, simple_profile("vendor/model:v1 ../x", vec({0.0, 1.0})));
  save_registry(r, dir.path().string());
  CHECK(std::filesystem::exists(dir.path() / "manifest.json"));
  const auto back = load_registry(dir.path().string());
  CHECK(back.version == r.version);
  CHECK(to_json(back.space) == to_json(r.space));
  REQUIRE(back.profiles.size() == r.profiles.size());
  for (const auto& [id, p] : r.profiles) CHECK(to_json(back.profiles.at(id)) == to_json(p));
  REQUIRE(back.anchor_sets.size() == 1);
  CHECK(to_json(back.anchor_sets.at("default")) == to_json(r.anchor_sets.at("default")));
  REQUIRE(back.predictor.has_value());
  CHECK(back.predictor->params == r.predictor->params);

  // Saving again into the same directory leaves identical files.
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const auto first = slurp(dir.path() / "manifest.json");
  save_registry(back, dir.path().string());
  CHECK(slurp(dir.path() / "manifest.json") == first);
}

TEST_CASE("loading a broken directory fails cleanly") {
  TempDir dir("registry-bad");
  CHECK_THROWS_AS(load_registry(dir.path().string()), Error);
  save_registry(fixture_registry(false), dir.path().string());
  std::ofstream(dir.path() / "manifest.json") << "{\"format\": \"other\"}";
  CHECK_THROWS_AS(load_registry(dir.path().string()), Error);
}

TEST_CASE("snapshots are isolated from later writes") {
  RegistryStore store(fixture_registry(false));
  const auto snap = store.snapshot();
  CHECK(snap->profiles.size() == 2);
  CHECK(store.register_model(simple_profile("m-c", vec({1.0, 1.0}))) == snap->version + 1);
  CHECK(snap->profiles.size() == 2);
  CHECK(store.snapshot()->profiles.size() == 3);
  CHECK_THROWS_AS(store.register_model(simple_profile("m-c", vec({1.0, 1.0}))), Error);
  CHECK(store.snapshot()->version == snap->version + 1);
}

TEST_CASE("concurrent readers see a consistent registry while a writer runs") {
  RegistryStore store(fixture_registry(false));
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      std::uint64_t last = 0;
      while (!done.load()) {
        const auto s = store.snapshot();
        // Three base changes plus one per extra model.
        if (s->version != 3 + (s->profiles.size() - 2) || s->version < last) ++bad;
        last = s->version;
      }
    });
  }
  for (int k = 0; k < 200; ++k) store.register_model(simple_profile("w-" + std::to_string(k), vec({0.0, 0.0})));
  done = true;
  for (auto& t : readers) t.join();
  CHECK(bad.load() == 0);
  CHECK(store.snapshot()->version == 203);
}
