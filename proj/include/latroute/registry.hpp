#pragma once

#include "latroute/anchor.hpp"
#include "latroute/irt.hpp"
#include "latroute/predictor.hpp"
#include "latroute/profile.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace latroute {

struct Registry {
  CalibratedSpace space;
  std::map<std::string, AnchorSet> anchor_sets;
  std::map<std::string, ModelProfile> profiles;
  std::optional<PredictorModel> predictor;
  std::uint64_t version = 0;

  int dim() const { return space.dim; }
  std::vector<ModelProfile> profile_list() const;
  // Referential integrity and dimension consistency.
  void validate() const;
};

// Returns the registry with `profile` added and the version bumped.
Registry register_model(Registry registry, ModelProfile profile, bool overwrite = false);
Registry add_anchor_set(Registry registry, const std::string& id, AnchorSet anchors);
Registry set_predictor(Registry registry, PredictorModel model);

// Directory layout: manifest.json, space.json, anchors/<n>.json,
// profiles/<n>.json, predictor.json. File names are positional so model ids
// never reach the filesystem.
void save_registry(const Registry& registry, const std::string& dir);
Registry load_registry(const std::string& dir);

// Single writer, many readers. Readers take an immutable snapshot and keep it
// for as long as they like; writers build a new registry and swap it in.
class RegistryStore {
 public:
  explicit RegistryStore(Registry initial = {});

  std::shared_ptr<const Registry> snapshot() const;

  // Each returns the new version.
  std::uint64_t register_model(ModelProfile profile, bool overwrite = false);
  std::uint64_t add_anchor_set(const std::string& id, AnchorSet anchors);
  std::uint64_t set_predictor(PredictorModel model);
  std::uint64_t replace(Registry registry);

 private:
  template <typename F>
  std::uint64_t update(F&& f);

  std::mutex writer_;
  std::shared_ptr<const Registry> current_;
};

}  // namespace latroute
