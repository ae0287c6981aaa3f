#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pwe/geometry.hpp"

namespace pwe {

using json = nlohmann::json;

/// Raised for scene files that fail to parse or violate the schema. The
/// message names the offending JSON pointer (or line and column for syntax
/// errors).
struct SceneError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json vecToJson(const Vec3& v);
Vec3 vecFromJson(const json& j, const std::string& where);

Floorplan floorplanFromJson(const json& j);
json floorplanToJson(const Floorplan& fp);

Floorplan loadFloorplan(const std::string& path);
void saveFloorplan(const Floorplan& fp, const std::string& path);

/// Every schema or geometry problem in a scene document; empty when valid.
std::vector<std::string> validateSceneText(const std::string& text);

/// Writes JSON with two-space indentation and a trailing newline.
void writeJsonFile(const json& j, const std::string& path);
json readJsonFile(const std::string& path);

}  // namespace pwe
