#pragma once

#include <map>
#include <vector>

#include "pwe/scene_io.hpp"
#include "pwe/tile_function.hpp"

namespace pwe {

struct SimulationConfig {
    double frequencyGHz = 2.4;
    double txPowerDbm = -30.0;
    int maxBounces = 50;
    double lossPerBounce = 0.01;
    int raysPerLobe = 4096;
    double rxCaptureRadius = 0.5;
    double noPweFloorDbm = -150.0;
    double dropBelowDbm = -170.0;
    /// Keep the polyline of every traced leg (for rendering).
    bool recordPaths = false;
};

struct Ray {
    Vec3 origin;
    Vec3 direction;
    double powerW = 0.0;
    int bounces = 0;
};

struct TileHits {
    double impingingW = 0.0;
    double reflectedW = 0.0;
};

struct Terminations {
    long absorbed = 0;
    long bounceLimit = 0;
    long escaped = 0;
    long captured = 0;
    long dropped = 0;
};

struct RayLeg {
    Vec3 from;
    Vec3 to;
    double powerW = 0.0;
};

struct SimResult {
    double rxPowerW = 0.0;
    double rxPowerDbm = -150.0;
    std::map<TileId, TileHits> perTileHits;
    Terminations terminations;
    int maxBouncesSeen = 0;
    std::vector<RayLeg> legs;
};

double dbmToWatts(double dbm);
double wattsToDbm(double w);

/// Rays over the TX lobe cone. Powers follow the sinusoidal taper
/// max(cos(pi psi / alpha), 0) and sum to the TX power.
std::vector<Ray> emitRays(const DevicePose& tx, const SimulationConfig& cfg);

/// Traces one ray and all of its children. Returns the power captured at RX.
double traceRay(const Ray& ray, const Floorplan& fp, const FunctionMap& functions, const DevicePose& rx,
                const SimulationConfig& cfg, SimResult& log);

SimResult simulate(const Floorplan& fp, const FunctionMap& functions, const DevicePose& tx, const DevicePose& rx,
                   const SimulationConfig& cfg = {});

json simResultToJson(const SimResult& r);

}  // namespace pwe
