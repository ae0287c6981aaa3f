#pragma once

#include "pwe/nn_core.hpp"
#include "pwe/scene_io.hpp"

namespace pwe {

/// Per-node angles (degrees), directions and weights, plus the RMSE trace
/// when a report is given.
json networkToJson(const PweNetwork& net, const CostReport* report = nullptr);

/// Rebuilds a dumped network over the tile geometry of `fp`. Link powers and
/// weights are taken as stored; call feedforward to recompute them.
PweNetwork networkFromJson(const json& j, const Floorplan& fp);

}  // namespace pwe
