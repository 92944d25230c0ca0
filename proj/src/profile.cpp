#include "latroute/profile.hpp"

#include <fmt/format.h>

#include <cmath>

namespace latroute {

void ModelProfile::validate() const {
  if (model_id.empty()) throw Error("model profile: empty model id");
  if (ability.theta.size() == 0) throw Error(fmt::format("model profile '{}': empty ability vector", model_id));
  for (Eigen::Index d = 0; d < ability.theta.size(); ++d)
    if (!std::isfinite(ability.theta(d))) throw Error(fmt::format("model profile '{}': non-finite ability", model_id));
  if (!(pricing.price_in >= 0.0 && pricing.price_out >= 0.0))
    throw Error(fmt::format("model profile '{}': prices must be >= 0", model_id));
  if (!(latency.ttft >= 0.0 && latency.tpot >= 0.0) || !std::isfinite(latency.ttft) || !std::isfinite(latency.tpot))
    throw Error(fmt::format("model profile '{}': latency parameters must be finite and >= 0", model_id));
  if (tokenizer_id.empty()) throw Error(fmt::format("model profile '{}': no tokenizer", model_id));
  try {
    verbosity.validate();
  } catch (const Error& e) {
    throw Error(fmt::format("model profile '{}': {}", model_id, e.what()));
  }
}

}  // namespace latroute
