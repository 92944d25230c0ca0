#include "latroute/registry.hpp"

#include "latroute/serialize.hpp"

#include <fmt/format.h>

#include <filesystem>

namespace latroute {

namespace fs = std::filesystem;

std::vector<ModelProfile> Registry::profile_list() const {
  std::vector<ModelProfile> out;
  out.reserve(profiles.size());
  for (const auto& [id, p] : profiles) out.push_back(p);
  return out;
}

void Registry::validate() const {
  for (const auto& [id, a] : anchor_sets) {
    if (a.dim != space.dim)
      throw DimensionError(fmt::format("anchor set '{}' dimension", id), static_cast<std::size_t>(space.dim),
                           static_cast<std::size_t>(a.dim));
    for (const auto& item : a.item_ids)
      if (!space.items.count(item)) throw Error(fmt::format("anchor set '{}' names unknown item '{}'", id, item));
  }
  for (const auto& [id, p] : profiles) {
    if (id != p.model_id) throw Error(fmt::format("profile keyed '{}' carries model_id '{}'", id, p.model_id));
    p.validate();
    if (p.dim() != space.dim)
      throw DimensionError(fmt::format("profile '{}' ability dimension", id), static_cast<std::size_t>(space.dim),
                           static_cast<std::size_t>(p.dim()));
    const auto& ref = p.metadata.anchor_set_id;
    if (!ref.empty() && !anchor_sets.count(ref))
      throw Error(fmt::format("profile '{}' references unknown anchor set '{}'", id, ref));
  }
  if (predictor && predictor->shape.dim != space.dim)
    throw DimensionError("predictor output dimension", static_cast<std::size_t>(space.dim),
                         static_cast<std::size_t>(predictor->shape.dim));
}

Registry register_model(Registry registry, ModelProfile profile, bool overwrite) {
  profile.validate();
  if (registry.space.dim <= 0) throw Error("registry has no calibrated space");
  if (profile.dim() != registry.space.dim)
    throw DimensionError(fmt::format("model '{}' has D={} but the registry space has D={}", profile.model_id,
                                     profile.dim(), registry.space.dim),
                         static_cast<std::size_t>(registry.space.dim), static_cast<std::size_t>(profile.dim()));
  if (registry.profiles.count(profile.model_id) && !overwrite)
    throw Error(fmt::format("model '{}' is already registered", profile.model_id));
  const auto& ref = profile.metadata.anchor_set_id;
  if (!ref.empty() && !registry.anchor_sets.count(ref))
    throw Error(fmt::format("model '{}' references unknown anchor set '{}'", profile.model_id, ref));
  auto id = profile.model_id;
  registry.profiles.insert_or_assign(std::move(id), std::move(profile));
  ++registry.version;
  return registry;
}

Registry add_anchor_set(Registry registry, const std::string& id, AnchorSet anchors) {
  if (id.empty()) throw Error("anchor set id must not be empty");
  registry.anchor_sets.insert_or_assign(id, std::move(anchors));
  registry.validate();
  ++registry.version;
  return registry;
}

Registry set_predictor(Registry registry, PredictorModel model) {
  model.validate();
  registry.predictor = std::move(model);
  registry.validate();
  ++registry.version;
  return registry;
}

// ---------------------------------------------------------------------------
// persistence

void save_registry(const Registry& registry, const std::string& dir) {
  registry.validate();
  const fs::path root(dir);
  fs::create_directories(root / "anchors");
  fs::create_directories(root / "profiles");

  Json manifest;
  manifest["format"] = "latroute-registry";
  manifest["version"] = registry.version;
  manifest["D"] = registry.space.dim;
  manifest["space"] = "space.json";
  write_json_file((root / "space.json").string(), to_json(registry.space));

  Json anchors = Json::array();
  std::size_t n = 0;
  for (const auto& [id, a] : registry.anchor_sets) {
    const auto file = fmt::format("anchors/{:04}.json", n++);
    write_json_file((root / file).string(), to_json(a));
    anchors.push_back({{"id", id}, {"file", file}});
  }
  manifest["anchor_sets"] = std::move(anchors);

  Json profiles = Json::array();
  n = 0;
  for (const auto& [id, p] : registry.profiles) {
    const auto file = fmt::format("profiles/{:04}.json", n++);
    write_json_file((root / file).string(), to_json(p));
    profiles.push_back({{"model_id", id}, {"file", file}});
  }
  manifest["profiles"] = std::move(profiles);

  if (registry.predictor) {
    write_json_file((root / "predictor.json").string(), to_json(*registry.predictor));
    manifest["predictor"] = "predictor.json";
  } else {
    manifest["predictor"] = nullptr;
  }
  // Manifest last: a crash mid-save leaves the previous manifest pointing at
  // files of the same names.
  write_json_file((root / "manifest.json").string(), manifest);
}

Registry load_registry(const std::string& dir) {
  const fs::path root(dir);
  const auto manifest = read_json_file((root / "manifest.json").string());
  Registry r;
  try {
    if (manifest.value("format", std::string()) != "latroute-registry")
      throw Error(fmt::format("'{}' is not a registry manifest", (root / "manifest.json").string()));
    r.version = manifest.at("version").get<std::uint64_t>();
    r.space = space_from_json(read_json_file((root / manifest.at("space").get<std::string>()).string()));
    for (const auto& a : manifest.at("anchor_sets"))
      r.anchor_sets[a.at("id").get<std::string>()] =
          anchors_from_json(read_json_file((root / a.at("file").get<std::string>()).string()));
    for (const auto& p : manifest.at("profiles")) {
      auto profile = profile_from_json(read_json_file((root / p.at("file").get<std::string>()).string()));
      const auto id = p.at("model_id").get<std::string>();
      if (profile.model_id != id) throw Error(fmt::format("manifest lists '{}' but file holds '{}'", id, profile.model_id));
      r.profiles[id] = std::move(profile);
    }
    if (!manifest.at("predictor").is_null())
      r.predictor = predictor_from_json(read_json_file((root / manifest.at("predictor").get<std::string>()).string()));
  } catch (const Json::exception& e) {
    throw Error(fmt::format("registry manifest: {}", e.what()));
  }
  if (manifest.at("D").get<int>() != r.space.dim)
    throw DimensionError("manifest D vs space D", static_cast<std::size_t>(manifest.at("D").get<int>()),
                         static_cast<std::size_t>(r.space.dim));
  r.validate();
  return r;
}

// ---------------------------------------------------------------------------
// store

RegistryStore::RegistryStore(Registry initial) : current_(std::make_shared<const Registry>(std::move(initial))) {}

std::shared_ptr<const Registry> RegistryStore::snapshot() const { return std::atomic_load(&current_); }

template <typename F>
std::uint64_t RegistryStore::update(F&& f) {
  std::lock_guard lock(writer_);
  auto next = std::make_shared<const Registry>(f(*std::atomic_load(&current_)));
  const auto version = next->version;
  std::atomic_store(&current_, std::shared_ptr<const Registry>(std::move(next)));
  return version;
}

std::uint64_t RegistryStore::register_model(ModelProfile profile, bool overwrite) {
  return update([&](const Registry& r) { return latroute::register_model(r, std::move(profile), overwrite); });
}

std::uint64_t RegistryStore::add_anchor_set(const std::string& id, AnchorSet anchors) {
  return update([&](const Registry& r) { return latroute::add_anchor_set(r, id, std::move(anchors)); });
}

std::uint64_t RegistryStore::set_predictor(PredictorModel model) {
  return update([&](const Registry& r) { return latroute::set_predictor(r, std::move(model)); });
}

std::uint64_t RegistryStore::replace(Registry registry) {
  registry.validate();
  return update([&](const Registry& r) {
    if (registry.version <= r.version) registry.version = r.version + 1;
    return std::move(registry);
  });
}

}  // namespace latroute
