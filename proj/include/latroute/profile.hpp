#pragma once

#include "latroute/estimators.hpp"
#include "latroute/irt.hpp"

#include <string>

namespace latroute {

struct ProfileMetadata {
  std::string display_name;
  std::string onboarded_at;  // ISO-8601, informational only
  std::string anchor_set_id;
};

// Everything the router needs to know about one model.
struct ModelProfile {
  std::string model_id;
  LatentAbility ability;
  ModelPricing pricing;
  VerbosityTable verbosity;
  LatencyProfile latency;
  std::string tokenizer_id = "whitespace";
  ProfileMetadata metadata;

  int dim() const { return static_cast<int>(ability.theta.size()); }
  void validate() const;
};

}  // namespace latroute
