#pragma once

#include <map>
#include <set>
#include <vector>

#include "pwe/geometry.hpp"
#include "pwe/tile_function.hpp"

namespace pwe {

struct WallGraph {
    std::vector<int> vertices;                     // SDM wall ids, ascending
    std::map<int, std::set<int>> adjacency;

    bool adjacent(int a, int b) const;
    std::size_t edgeCount() const;
};

using WallPath = std::vector<int>;

/// Walls are adjacent when at least one pair of their tiles is linked.
WallGraph buildWallGraph(const Floorplan& fp);

/// SDM wall whose nearest tile centre is closest to the device among walls
/// with a device-visible tile. Throws when no wall qualifies.
int deviceAdjacentWall(const Floorplan& fp, const DevicePose& dev);

/// Fewest-hop path from the TX-adjacent wall to the RX-adjacent wall, ties
/// resolved towards the lexicographically smallest id sequence.
WallPath selectWallPath(const WallGraph& g, const Floorplan& fp, const DevicePose& tx, const DevicePose& rx);

/// Tiles whose centre lies within the TX lobe (half-angle alpha/2) and is
/// visible from the TX.
std::vector<TileId> firstLayerTiles(const DevicePose& tx, const Wall& wall, const Floorplan& fp);

struct DisconnectedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct KpConfigResult {
    std::vector<std::vector<TileId>> paths;
    FunctionMap functions;
    int requested = 0;
    bool fewerThanRequested() const { return static_cast<int>(paths.size()) < requested; }
};

/// Tiles admitted per wall-path layer. Layer 0 feeds from the TX, the last
/// layer feeds the RX.
using LayerTiles = std::vector<std::vector<TileId>>;

/// K tile-disjoint TX-to-RX paths through consecutive layers: the largest
/// possible number of paths (at most K), and among those the smallest total
/// length. Every path tile is assigned Steer with focus.
KpConfigResult kpConfig(const Floorplan& fp, const LayerTiles& layers, const DevicePose& tx, const DevicePose& rx,
                        int K);

/// Convenience overload over the full (unpruned) wall path of the floorplan.
KpConfigResult kpConfig(const Floorplan& fp, const DevicePose& tx, const DevicePose& rx, int K);

}  // namespace pwe
