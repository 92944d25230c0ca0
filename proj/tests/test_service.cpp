#include "registry_fixture.hpp"
#include "latroute/service.hpp"

#include <doctest.h>

#include <atomic>
#include <thread>

using namespace latroute;
using namespace latroute::testing;

namespace {

ServiceOptions fixed_clock() {
  ServiceOptions o;
  o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
  return o;
}

const char* kFixtureRequest =
    R"({"id": "r1", "policy": "max-acc", "queries": [)"
    R"({"id": "q1", "text": "What is the capital of France?", "alpha": [1.0, 0.5], "b": [0.2, -0.8]},)"
    R"({"id": "q2", "text": "Prove that sqrt(2) is irrational.", "alpha": [0.3, 2.0], "b": [1.0, 0.5]}]})";

Json call(const Registry& r, const std::string& line) { return Json::parse(handle_route_request(r, line, fixed_clock())); }

}  // namespace

TEST_CASE("one query through the predictor") {
  const auto r = fixture_registry(true);
  const auto resp = call(r, R"({"id": 7, "queries": [{"id": "a", "text": "Summarise this paragraph."}]})");
  REQUIRE_FALSE(resp.contains("error"));
  CHECK(resp.at("id") == 7);
  REQUIRE(resp.at("choices").size() == 1);
  CHECK(resp.at("choices")[0].at("query_id") == "a");
  CHECK(resp.at("estimates").size() == 2);
  CHECK(resp.at("solver") == "exact");
  CHECK(resp.at("feasible") == true);
  CHECK(resp.at("registry_version") == r.version);
  CHECK(resp.at("timestamp") == "2026-01-01T00:00:00Z");
  const double p = resp.at("choices")[0].at("p");
  CHECK(p > 0.0);
  CHECK(p < 1.0);
}

TEST_CASE("responses are deterministic") {
  const auto r = fixture_registry(true);
  const std::string line = R"({"id": "x", "policy": "balanced", "queries": [{"id": "a", "text": "Hi"}, {"id": "b", "text": "Explain (a (b c)) in detail?"}]})";
  const auto first = handle_route_request(r, line, fixed_clock());
  for (int k = 0; k < 5; ++k) CHECK(handle_route_request(r, line, fixed_clock()) == first);
  auto par = fixed_clock();
  par.parallel = true;
  CHECK(handle_route_request(r, line, par) == first);
}

TEST_CASE("explicit coordinates reproduce the fixture estimates") {
  const auto resp = call(fixture_registry(false), kFixtureRequest);
  REQUIRE_FALSE(resp.contains("error"));
  const auto& est = resp.at("estimates");
  REQUIRE(est.size() == 4);
  CHECK(est[0].at("model_id") == "m-a");
  CHECK(est[0].at("p").get<double>() == doctest::Approx(0.6681877721681662).epsilon(1e-12));
  CHECK(est[1].at("cost").get<double>() == doctest::Approx(0.0416).epsilon(1e-12));
  CHECK(est[2].at("latency").get<double>() == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(est[3].at("p").get<double>() == doctest::Approx(0.6341355910108007).epsilon(1e-12));
  CHECK(resp.at("choices")[0].at("model_id") == "m-a");
  CHECK(resp.at("choices")[1].at("model_id") == "m-b");
}

TEST_CASE("constraints and weights are honoured") {
  const auto r = fixture_registry(false);
  auto req = Json::parse(kFixtureRequest);
  req.erase("policy");
  req["weights"] = {{"p", 1.0}, {"c", 0.0}, {"t", 0.0}};
  req["constraints"] = {{"max_total_cost", 0.15}};
  const auto resp = call(r, req.dump());
  REQUIRE_FALSE(resp.contains("error"));
  CHECK(resp.at("feasible") == true);
  double total = 0.0;
  for (const auto& c : resp.at("choices")) total += c.at("cost").get<double>();
  CHECK(total <= 0.15);
  // q1 on m-a (0.106) plus q2 on m-b (0.0618) would exceed the cap.
  CHECK(resp.at("choices")[0].at("model_id") == "m-b");
}

TEST_CASE("bad requests map to error codes") {
  const auto r = fixture_registry(true);
  auto code = [&](const Registry& reg, const std::string& line) {
    const auto resp = call(reg, line);
    REQUIRE(resp.contains("error"));
    return resp.at("error").at("code").get<int>();
  };
  CHECK(code(r, "{not json") == 400);
  CHECK(code(r, "[1, 2]") == 400);
  CHECK(code(r, R"({"id": 1})") == 400);
  CHECK(code(r, R"({"queries": []})") == 400);
  CHECK(code(r, R"({"queries": [{"text": "no id"}]})") == 400);
  CHECK(code(r, R"({"queries": [{"id": "a"}], "policy": "fastest"})") == 400);
  CHECK(code(r, R"({"queries": [{"id": "a"}], "weights": {"p": 0.9}})") == 400);
  CHECK(code(r, R"({"queries": [{"id": "a"}], "normalize": "yes"})") == 400);
  CHECK(code(r, R"({"queries": [{"id": "a"}], "constraints": {"min_mean_accuracy": 2}})") == 400);
  CHECK(code(r, R"({"queries": [{"id": "a", "alpha": [1, 2, 3], "b": [0, 0, 0]}]})") == 400);
  CHECK(code(r, R"({"queries": [{"id": "a", "alpha": [-1, 2], "b": [0, 0]}]})") == 400);
  CHECK(code(fixture_registry(false), R"({"queries": [{"id": "a", "text": "x"}]})") == 503);
  CHECK(code(Registry{}, R"({"queries": [{"id": "a", "text": "x"}]})") == 503);
  const auto resp = call(r, R"({"id": "keep", "queries": 3})");
  CHECK(resp.at("id") == "keep");
}

TEST_CASE("file embedder needs an embedding per query") {
  auto r = fixture_registry(false);
  auto model = small_predictor();
  model.embedder = EmbedderKind::kFile;
  r = set_predictor(r, model);
  auto resp = call(r, R"({"queries": [{"id": "a", "text": "x"}]})");
  CHECK(resp.at("error").at("code") == 400);
  Json req = {{"queries", {{{"id", "a"}, {"text", "x"}, {"embedding", std::vector<double>(16, 0.1)}}}}};
  resp = call(r, req.dump());
  CHECK_FALSE(resp.contains("error"));
  req["queries"][0]["embedding"] = std::vector<double>(5, 0.1);
  CHECK(call(r, req.dump()).at("error").at("code") == 400);
}

TEST_CASE("wire responses match in-process ones") {
  RegistryStore store(fixture_registry(true));
  RouteServer server(store, 0, fixed_clock());
  REQUIRE(server.port() != 0);
  RouteClient client("127.0.0.1", server.port());
  const auto snap = store.snapshot();
  CHECK(client.request(kFixtureRequest) == handle_route_request(*snap, kFixtureRequest, fixed_clock()));
  CHECK(Json::parse(client.request("{oops")).at("error").at("code") == 400);
  // A model registered after the connection opened is visible to the next request.
  store.register_model(simple_profile("m-c", vec({5.0, 5.0})));
  const auto resp = Json::parse(client.request(kFixtureRequest));
  CHECK(resp.at("estimates").size() == 6);
  CHECK(resp.at("registry_version") == snap->version + 1);
  server.stop();
}

TEST_CASE("concurrent clients") {
  RegistryStore store(fixture_registry(true));
  RouteServer server(store, 0, fixed_clock());
  const auto expected = handle_route_request(*store.snapshot(), kFixtureRequest, fixed_clock());
  std::atomic<int> ok{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 10; ++t) {
    threads.emplace_back([&] {
      RouteClient client("127.0.0.1", server.port());
      for (int k = 0; k < 10; ++k)
        if (client.request(kFixtureRequest) == expected) ++ok;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok.load() == 100);
  server.stop();
}

TEST_CASE("utc timestamp format") {
  const auto ts = utc_timestamp();
  REQUIRE(ts.size() == 24);
  CHECK(ts[19] == '.');
  CHECK(ts[4] == '-');
  CHECK(ts[10] == 'T');
  CHECK(ts.back() == 'Z');
}
