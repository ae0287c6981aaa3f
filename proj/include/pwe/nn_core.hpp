#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "pwe/fit.hpp"
#include "pwe/geometry.hpp"
#include "pwe/pwe_graph.hpp"

namespace pwe {

/// Index of the source (or target) node in the previous (or next) layer.
/// kExternal marks the TX input on layer 0 and the RX output on the last layer.
constexpr int kExternal = -1;

struct InLink {
    int source = kExternal;
    int sourceLink = -1;  // index into the source node's out links
    Vec3 d;              // unit direction of travel into the tile
    double power = 0.0;  // impinging power fraction
};

struct OutLink {
    int target = kExternal;
    int targetLink = -1;  // index into the target node's in links
    Vec3 o;               // unit direction of travel away from the tile
    double weight = 0.0;  // share of the node's power sent along o
};

struct TileNode {
    Tile tile;
    int layer = 0;
    std::vector<InLink> in;
    std::vector<OutLink> out;
    double significance = 0.0;

    double totalPower() const;
    const RotationAngles& angles() const { return tile.angles; }
};

struct PweNetwork {
    std::vector<std::vector<TileNode>> layers;
    std::vector<double> inputVector;  // per layer-0 node
    std::vector<double> idealOutput;  // per last-layer node

    std::size_t nodeCount() const;
    const std::vector<TileNode>& outputLayer() const { return layers.back(); }
};

struct CostFunction {
    enum class Kind { RMSE, HalfSSE, Exponential };
    Kind kind = Kind::RMSE;
    double tau = 1.0;

    static CostFunction rmse() { return {Kind::RMSE, 1.0}; }
    static CostFunction halfSse() { return {Kind::HalfSSE, 1.0}; }
    static CostFunction exponential(double tau) { return {Kind::Exponential, tau}; }
};

std::string to_string(const CostFunction& c);
CostFunction parseCostFunction(const std::string& s);

struct TrainingConfig {
    double eta = 0.95;
    double mu = 0.0;
    int cycles = 10000;
    CostFunction cost;
    std::uint64_t seed = 1;
    double pruningFactor = 1.0;
};

struct CostReport {
    std::vector<double> perCycleRMSE;
    std::vector<double> finalDeviations;
    double initialRMSE = 0.0;
    double finalRMSE = 0.0;
};

/// Tiles of each wall-path layer after pruning: layer 0 keeps every
/// TX-illuminated tile, the others keep ceil(p * tiles) tiles sampled without
/// replacement from the seed.
LayerTiles prunedLayers(const Floorplan& fp, const WallPath& path, const DevicePose& tx, double pruningFactor,
                        std::uint64_t seed);

/// Network over the given layer tiles with links between consecutive layers
/// wherever tiles are linked; initial angles are drawn from the seed.
PweNetwork buildNetwork(const Floorplan& fp, const LayerTiles& layers, const DevicePose& tx, const DevicePose& rx,
                        std::uint64_t seed, double inputScale = 1.0);

PweNetwork buildNetwork(const Floorplan& fp, const WallPath& path, const DevicePose& tx, const DevicePose& rx,
                        double pruningFactor, std::uint64_t seed);

/// Power fractions of a node for its current angles and incoming powers.
std::vector<double> computeLinkWeights(const TileNode& node);

/// Pushes the input vector through the network, refreshing every node's
/// incoming powers and weights. Returns the per-output-node powers.
std::vector<double> feedforward(PweNetwork& net);

/// Output powers of an already propagated network.
std::vector<double> currentOutputs(const PweNetwork& net);

double cost(std::span<const double> outputs, std::span<const double> ideal, const CostFunction& fn);
double rmse(std::span<const double> outputs, std::span<const double> ideal);
/// d cost / d output_l.
std::vector<double> costGradient(std::span<const double> outputs, std::span<const double> ideal,
                                 const CostFunction& fn);

/// Per-link gradients from the previous step, kept for the momentum term.
struct MomentumState {
    std::vector<std::vector<std::vector<double>>> prev;  // [layer][node][out link]
};

/// One link-level training step. Returns the RMSE after the step.
double backpropStep(PweNetwork& net, const TrainingConfig& cfg, MomentumState& state,
                    const FitOptions& fit = {.local = true});

/// Exact gradient of the cost with respect to the node's two active angles
/// (in plane order), for a network in a propagated state.
std::array<double, 2> angleGradient(const PweNetwork& net, int layer, int index, const CostFunction& fn);

/// Writes each node's significance: delta_l on the output layer, the total
/// impinging power elsewhere.
void updateSignificance(PweNetwork& net);

/// Runs exactly cfg.cycles steps. The returned network is the lowest-RMSE
/// state visited, the initial one included.
CostReport train(PweNetwork& net, const TrainingConfig& cfg);

struct EnsembleConfig {
    int m = 1;
    /// Per member, the admitted tiles of each layer.
    std::vector<LayerTiles> memberTiles;
};

struct EnsembleResult {
    std::vector<PweNetwork> members;
    std::vector<CostReport> reports;
    std::map<TileId, RotationAngles> mergedAngles;
};

EnsembleResult buildEnsemble(const Floorplan& fp, const DevicePose& tx, const DevicePose& rx,
                             const EnsembleConfig& ens, const TrainingConfig& cfg);

}  // namespace pwe
