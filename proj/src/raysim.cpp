#include "pwe/raysim.hpp"

#include <algorithm>
#include <limits>

namespace pwe {

namespace {

constexpr double kEscapeDistance = 1e4;  // metres; legs leaving the scene
constexpr double kGoldenAngle = 2.39996322972865332;

double pointSegmentDistance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.dot(ab);
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (a + ab * t - p).norm();
}

struct Hit {
    const Wall* wall = nullptr;
    double t = std::numeric_limits<double>::infinity();
};

Hit nearestWall(const Vec3& from, const Vec3& dir, const Floorplan& fp) {
    Hit h;
    for (const auto& w : fp.walls) {
        const auto t = w.intersect(from, dir);
        if (t && *t > 1e-9 && *t < h.t) {
            h.t = *t;
            h.wall = &w;
        }
    }
    return h;
}

}  // namespace

double dbmToWatts(double dbm) { return std::pow(10.0, dbm / 10.0) / 1000.0; }

double wattsToDbm(double w) { return 10.0 * std::log10(w * 1000.0); }

std::vector<Ray> emitRays(const DevicePose& tx, const SimulationConfig& cfg) {
    if (cfg.raysPerLobe < 1) throw std::invalid_argument("raysPerLobe must be >= 1");
    const double total = dbmToWatts(cfg.txPowerDbm);
    const Vec3 axis = tx.boresight();
    if (cfg.raysPerLobe == 1) return {Ray{tx.position, axis, total, 0}};

    const Vec3 helper = std::abs(axis.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
    const Vec3 e1 = axis.cross(helper).normalized();
    const Vec3 e2 = axis.cross(e1);
    const double alpha = deg2rad(tx.lobeWidthDeg);
    const double cosMax = std::cos(alpha / 2.0);
    const int n = cfg.raysPerLobe;

    std::vector<Ray> rays;
    std::vector<double> gains;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        // Fibonacci lattice on the spherical cap: equal solid angle per ray.
        const double u = (i + 0.5) / n;
        const double cosPsi = 1.0 - u * (1.0 - cosMax);
        const double sinPsi = std::sqrt(std::max(0.0, 1.0 - cosPsi * cosPsi));
        const double az = i * kGoldenAngle;
        const Vec3 dir = (axis * cosPsi + e1 * (sinPsi * std::cos(az)) + e2 * (sinPsi * std::sin(az))).normalized();
        const double psi = std::acos(std::clamp(cosPsi, -1.0, 1.0));
        const double g = std::max(std::cos(kPi * psi / alpha), 0.0);
        rays.push_back({tx.position, dir, 0.0, 0});
        gains.push_back(g);
        sum += g;
    }
    for (std::size_t i = 0; i < rays.size(); ++i) rays[i].powerW = total * gains[i] / sum;
    return rays;
}

double traceRay(const Ray& ray, const Floorplan& fp, const FunctionMap& functions, const DevicePose& rx,
                const SimulationConfig& cfg, SimResult& log) {
    const double dropW = dbmToWatts(cfg.dropBelowDbm);
    double captured = 0.0;
    std::vector<Ray> stack{ray};
    while (!stack.empty()) {
        const Ray r = stack.back();
        stack.pop_back();
        log.maxBouncesSeen = std::max(log.maxBouncesSeen, r.bounces);

        const Hit hit = nearestWall(r.origin, r.direction, fp);
        const Vec3 end = r.origin + r.direction * std::min(hit.t, kEscapeDistance);
        if (cfg.recordPaths) log.legs.push_back({r.origin, end, r.powerW});
        if (pointSegmentDistance(rx.position, r.origin, end) <= cfg.rxCaptureRadius) {
            captured += r.powerW;
            ++log.terminations.captured;
            continue;
        }
        if (!hit.wall) {
            ++log.terminations.escaped;
            continue;
        }
        const Wall& w = *hit.wall;
        if (w.kind != SurfaceKind::SDM || r.direction.dot(w.normal()) >= 0.0) {
            ++log.terminations.absorbed;
            continue;
        }
        const auto idx = w.tileAt(end);
        if (!idx) {
            ++log.terminations.absorbed;
            continue;
        }
        const TileId id{w.id, *idx};
        TileHits& th = log.perTileHits[id];
        th.impingingW += r.powerW;

        const auto it = functions.find(id);
        if (it == functions.end() || it->second.kind == FunctionKind::Idle ||
            it->second.kind == FunctionKind::Absorb) {
            ++log.terminations.absorbed;
            continue;
        }
        if (r.bounces + 1 > cfg.maxBounces) {
            ++log.terminations.bounceLimit;
            continue;
        }
        const TileFunction& f = it->second;
        const Vec3 centre = w.tile(*idx).center;
        const double kept = r.powerW * (1.0 - cfg.lossPerBounce);
        auto launch = [&](const Vec3& dir, double p) {
            th.reflectedW += p;
            if (p < dropW) {
                ++log.terminations.dropped;
                return;
            }
            stack.push_back({centre, dir, p, r.bounces + 1});
        };
        if (f.kind == FunctionKind::Steer) {
            launch(f.o, kept);
        } else {
            // Reverse order keeps the first branch on top of the stack.
            for (auto b = f.branches.rbegin(); b != f.branches.rend(); ++b) launch(b->o, kept * b->weight);
        }
    }
    return captured;
}

SimResult simulate(const Floorplan& fp, const FunctionMap& functions, const DevicePose& tx, const DevicePose& rx,
                   const SimulationConfig& cfg) {
    SimResult res;
    for (const auto& ray : emitRays(tx, cfg)) res.rxPowerW += traceRay(ray, fp, functions, rx, cfg, res);
    res.rxPowerDbm = res.rxPowerW > 0.0 ? wattsToDbm(res.rxPowerW) : cfg.noPweFloorDbm;
    return res;
}

json simResultToJson(const SimResult& r) {
    json j;
    j["rx_power_w"] = r.rxPowerW;
    j["rx_power_dbm"] = r.rxPowerDbm;
    j["max_bounces"] = r.maxBouncesSeen;
    j["terminations"] = {{"absorbed", r.terminations.absorbed},       {"bounce_limit", r.terminations.bounceLimit},
                         {"escaped", r.terminations.escaped},         {"captured", r.terminations.captured},
                         {"dropped", r.terminations.dropped}};
    j["tiles"] = json::array();
    for (const auto& [id, h] : r.perTileHits)
        j["tiles"].push_back(
            {{"wall", id.wall}, {"index", id.index}, {"impinging_w", h.impingingW}, {"reflected_w", h.reflectedW}});
    return j;
}

}  // namespace pwe
