#pragma once

#include <utility>
#include <vector>

#include "pwe/nn_core.hpp"
#include "pwe/scene_io.hpp"
#include "pwe/tile_function.hpp"

namespace pwe {

struct InterpretationConfig {
    /// A link carries power iff its weight (outgoing) or its power relative
    /// to the total network input (incoming) exceeds this.
    double weightThreshold = 0.01;
    double angleToleranceDeg = 5.0;
};

struct ConsistencyError : std::logic_error {
    using std::logic_error::logic_error;
};

struct DirectedPower {
    Vec3 dir;
    double value = 0.0;
};

/// Index pair (into dSet, oSet) of the Steer that leaves the fewest outgoing
/// directions uncovered when every incoming direction is reflected by it.
std::pair<int, int> multiSteerMap(const std::vector<DirectedPower>& dSet, const std::vector<DirectedPower>& oSet,
                                  double toleranceDeg);

/// Number of oSet directions not matched by any reflection of dSet under n.
int uncoveredCount(const Vec3& n, const std::vector<DirectedPower>& dSet, const std::vector<DirectedPower>& oSet,
                   double toleranceDeg);

TileFunction interpretNode(const TileNode& node, const InterpretationConfig& cfg, double totalInput = 1.0);

/// Function of every network node, Idle ones included.
FunctionMap interpretNetwork(const PweNetwork& net, const InterpretationConfig& cfg = {});

/// Non-Idle tiles divided by all SDM tiles on the given walls.
double tileOccupancy(const FunctionMap& functions, const Floorplan& fp, const std::vector<int>& walls);

json functionToJson(const TileId& id, const TileFunction& f);
json manifestToJson(const FunctionMap& functions);
FunctionMap manifestFromJson(const json& j);

}  // namespace pwe
