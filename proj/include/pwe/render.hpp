#pragma once

#include <string>

#include "pwe/raysim.hpp"
#include "pwe/tile_function.hpp"

namespace pwe {

/// Top-down SVG of the floorplan: walls, tiles coloured by function, devices
/// and any recorded ray legs.
std::string renderSvg(const Floorplan& fp, const FunctionMap& functions, const SimResult* sim = nullptr);

}  // namespace pwe
