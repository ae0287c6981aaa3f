#pragma once

#include <map>
#include <string>
#include <vector>

#include "pwe/geometry.hpp"

namespace pwe {

enum class FunctionKind { Idle, Steer, Absorb, Split };

std::string to_string(FunctionKind k);
FunctionKind parseFunctionKind(const std::string& s);

struct Branch {
    Vec3 o;
    double weight = 0.0;
};

/// Electromagnetic function deployed on one tile.
///   Steer:  d -> o
///   Absorb: d
///   Split:  d -> branches
struct TileFunction {
    FunctionKind kind = FunctionKind::Idle;
    Vec3 d;
    Vec3 o;
    std::vector<Branch> branches;
    bool focus = false;
    /// Set when a Steer was chosen by multiSteerMap.
    bool multiSteer = false;

    static TileFunction steer(const Vec3& d, const Vec3& o, bool multi = false) {
        return {FunctionKind::Steer, d, o, {}, true, multi};
    }
    static TileFunction absorb(const Vec3& d) { return {FunctionKind::Absorb, d, {}, {}, false, false}; }
    static TileFunction split(const Vec3& d, std::vector<Branch> b) {
        return {FunctionKind::Split, d, {}, std::move(b), true, false};
    }
};

using FunctionMap = std::map<TileId, TileFunction>;

}  // namespace pwe
