#pragma once

#include "latroute/anchor.hpp"
#include "latroute/irt.hpp"
#include "latroute/predictor.hpp"
#include "latroute/profile.hpp"

#include <json.hpp>

#include <string>

namespace latroute {

using Json = nlohmann::json;

Json to_json(const CalibratedSpace& space);
CalibratedSpace space_from_json(const Json& j);

Json to_json(const AnchorSet& anchors);
AnchorSet anchors_from_json(const Json& j);

Json to_json(const ModelProfile& profile);
ModelProfile profile_from_json(const Json& j);

Json to_json(const PredictorModel& model);
PredictorModel predictor_from_json(const Json& j);

Json read_json_file(const std::string& path);
// Writes via a temporary file and rename, so readers never see partial files.
void write_json_file(const std::string& path, const Json& j);

Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j);

}  // namespace latroute
