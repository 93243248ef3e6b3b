#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphrl/domain/generate.hpp"
#include "morphrl/domain/morphology.hpp"

namespace morphrl {

nlohmann::json morphology_to_json(const Morphology& m);
// Validates the result; malformed documents raise InvalidInput.
Morphology morphology_from_json(const nlohmann::json& j);

nlohmann::json split_to_json(const RobotSplit& s);
RobotSplit split_from_json(const nlohmann::json& j);

nlohmann::json gen_spec_to_json(const GenSpec& spec);
// Missing keys keep their defaults.
GenSpec gen_spec_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; output is byte-stable.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

Morphology load_morphology(const std::filesystem::path& path);
void save_morphology(const std::filesystem::path& path, const Morphology& m);

// Loads the morphologies listed in one partition of a split file from
// "<robot_dir>/<id>.json".
std::vector<Morphology> load_robot_set(const std::filesystem::path& robot_dir, const std::filesystem::path& split_file,
                                       const std::string& partition);

}  // namespace morphrl
