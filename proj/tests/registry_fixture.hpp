#pragma once

#include "helpers.hpp"
#include "latroute/registry.hpp"

namespace latroute::testing {

inline std::vector<ModelProfile> two_models() {
  auto a = simple_profile("m-a", vec({0.5, 0.0}), 1e-3, 2e-3);
  auto b = simple_profile("m-b", vec({-0.5, 1.0}), 2e-4, 5e-4);
  b.verbosity.mean_lengths = {80.0, 120.0};
  b.latency = {0.5, 0.02, 0.0};
  b.tokenizer_id = "chars4";
  return {a, b};
}

inline CalibratedSpace small_space() {
  CalibratedSpace s;
  s.dim = 2;
  s.items["i0"] = {"i0", vec({1.0, 0.2}), vec({0.0, 0.5})};
  s.items["i1"] = {"i1", vec({0.1, 1.5}), vec({-1.0, 0.0})};
  s.items["i2"] = {"i2", vec({0.7, 0.7}), vec({0.3, 0.3})};
  s.abilities["m-a"] = {"m-a", vec({0.5, 0.0})};
  s.fit_report.epochs = 100;
  s.fit_report.checkpoints = {1.0, 0.5};
  return s;
}

inline PredictorModel small_predictor(std::uint64_t seed = 3) {
  ClusterAssignment c;
  c.clusters = {{0}, {1}};
  c.abs_correlation = Mat::Identity(2, 2);
  auto m = PredictorModel::create({16, 2, 8, 2, 4}, c, seed);
  m.mean_b = vec({0.1, -0.1});
  return m;
}

// Space, one anchor set, the two fixture models and a hashing predictor.
inline Registry fixture_registry(bool with_predictor = true) {
  Registry r;
  r.space = small_space();
  r = add_anchor_set(r, "default", AnchorSet{{"i0", "i1"}, {0.5, 0.25}, 1e-6, 2});
  for (auto p : two_models()) {
    p.metadata.anchor_set_id = "default";
    r = register_model(r, p);
  }
  if (with_predictor) r = set_predictor(r, small_predictor());
  return r;
}

}  // namespace latroute::testing
