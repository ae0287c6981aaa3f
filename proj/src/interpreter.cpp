#include "pwe/interpreter.hpp"

#include <algorithm>
#include <set>

namespace pwe {

std::string to_string(FunctionKind k) {
    switch (k) {
        case FunctionKind::Idle: return "Idle";
        case FunctionKind::Steer: return "Steer";
        case FunctionKind::Absorb: return "Absorb";
        case FunctionKind::Split: return "Split";
    }
    return "Idle";
}

FunctionKind parseFunctionKind(const std::string& s) {
    for (auto k : {FunctionKind::Idle, FunctionKind::Steer, FunctionKind::Absorb, FunctionKind::Split})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown tile function '" + s + "'");
}

int uncoveredCount(const Vec3& n, const std::vector<DirectedPower>& dSet, const std::vector<DirectedPower>& oSet,
                   double toleranceDeg) {
    const double tol = deg2rad(toleranceDeg);
    std::vector<bool> removed(oSet.size(), false);
    for (const auto& d : dSet) {
        const Vec3 r = reflect(d.dir, n);
        for (std::size_t o = 0; o < oSet.size(); ++o)
            if (!removed[o] && angleBetween(r, oSet[o].dir) <= tol) removed[o] = true;
    }
    return static_cast<int>(std::count(removed.begin(), removed.end(), false));
}

std::pair<int, int> multiSteerMap(const std::vector<DirectedPower>& dSet, const std::vector<DirectedPower>& oSet,
                                  double toleranceDeg) {
    if (dSet.empty() || oSet.empty()) throw std::invalid_argument("multiSteerMap needs non-empty sets");
    std::pair<int, int> best{0, 0};
    int bestScore = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < dSet.size(); ++i) {
        for (std::size_t j = 0; j < oSet.size(); ++j) {
            const Vec3 n = steerNormal(dSet[i].dir, oSet[j].dir);
            const int score = uncoveredCount(n, dSet, oSet, toleranceDeg);
            if (score < bestScore) {
                bestScore = score;
                best = {static_cast<int>(i), static_cast<int>(j)};
            }
        }
    }
    return best;
}

TileFunction interpretNode(const TileNode& node, const InterpretationConfig& cfg, double totalInput) {
    std::vector<DirectedPower> D, O;
    for (const auto& l : node.in)
        if (l.power > cfg.weightThreshold * totalInput) D.push_back({l.d, l.power});
    for (const auto& l : node.out)
        if (l.weight > cfg.weightThreshold) O.push_back({l.o, l.weight});

    if (D.empty()) {
        const double z = node.totalPower();
        for (const auto& l : node.out)
            if (z <= 0.0 && l.weight * z != 0.0)
                throw ConsistencyError("tile " + to_string(node.tile.id) + " emits power without input");
        return {};
    }
    if (O.empty()) {
        const auto strongest =
            std::max_element(D.begin(), D.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
        return TileFunction::absorb(strongest->dir);
    }
    if (D.size() == 1 && O.size() == 1) return TileFunction::steer(D[0].dir, O[0].dir);
    if (D.size() == 1) {
        std::vector<Branch> branches;
        for (const auto& o : O) branches.push_back({o.dir, o.value});
        return TileFunction::split(D[0].dir, std::move(branches));
    }
    const auto [i, j] = multiSteerMap(D, O, cfg.angleToleranceDeg);
    return TileFunction::steer(D[i].dir, O[j].dir, true);
}

FunctionMap interpretNetwork(const PweNetwork& net, const InterpretationConfig& cfg) {
    double total = 0.0;
    for (double v : net.inputVector) total += v;
    FunctionMap out;
    for (const auto& layer : net.layers)
        for (const auto& n : layer) out[n.tile.id] = interpretNode(n, cfg, total);
    return out;
}

double tileOccupancy(const FunctionMap& functions, const Floorplan& fp, const std::vector<int>& walls) {
    int total = 0, used = 0;
    const std::set<int> wallSet(walls.begin(), walls.end());
    for (int w : wallSet) total += fp.wall(w).tileCount();
    for (const auto& [id, f] : functions)
        if (f.kind != FunctionKind::Idle && wallSet.contains(id.wall)) ++used;
    return total == 0 ? 0.0 : static_cast<double>(used) / total;
}

json functionToJson(const TileId& id, const TileFunction& f) {
    json j;
    j["wall"] = id.wall;
    j["index"] = id.index;
    j["function"] = to_string(f.kind);
    if (f.kind != FunctionKind::Idle) j["d"] = vecToJson(f.d);
    if (f.kind == FunctionKind::Steer) j["o"] = vecToJson(f.o);
    if (f.kind == FunctionKind::Split) {
        j["branches"] = json::array();
        for (const auto& b : f.branches) j["branches"].push_back({{"o", vecToJson(b.o)}, {"weight", b.weight}});
    }
    j["focus"] = f.focus;
    j["multi_steer"] = f.multiSteer;
    j["extensions"] = json::object();
    return j;
}

json manifestToJson(const FunctionMap& functions) {
    json j;
    j["tiles"] = json::array();
    for (const auto& [id, f] : functions) j["tiles"].push_back(functionToJson(id, f));
    return j;
}

FunctionMap manifestFromJson(const json& j) {
    FunctionMap out;
    if (!j.contains("tiles") || !j["tiles"].is_array()) throw SceneError("/tiles: expected an array");
    for (std::size_t i = 0; i < j["tiles"].size(); ++i) {
        const json& t = j["tiles"][i];
        const std::string where = "/tiles/" + std::to_string(i);
        TileFunction f;
        try {
            f.kind = parseFunctionKind(t.at("function").get<std::string>());
            if (f.kind != FunctionKind::Idle) f.d = vecFromJson(t.at("d"), where + "/d");
            if (f.kind == FunctionKind::Steer) f.o = vecFromJson(t.at("o"), where + "/o");
            if (f.kind == FunctionKind::Split)
                for (const auto& b : t.at("branches"))
                    f.branches.push_back({vecFromJson(b.at("o"), where + "/branches"), b.at("weight").get<double>()});
            f.focus = t.value("focus", false);
            f.multiSteer = t.value("multi_steer", false);
            out[{t.at("wall").get<int>(), t.at("index").get<int>()}] = f;
        } catch (const json::exception& e) {
            throw SceneError(where + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw SceneError(where + ": " + e.what());
        }
    }
    return out;
}

}  // namespace pwe
