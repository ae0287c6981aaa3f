#include "pwe/render.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace pwe {

namespace {

constexpr double kScale = 40.0;  // pixels per metre
constexpr double kMargin = 20.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

const char* colour(const TileFunction* f) {
    if (!f) return "#c8c8c8";
    switch (f->kind) {
        case FunctionKind::Idle: return "#c8c8c8";
        case FunctionKind::Steer: return f->multiSteer ? "#d62728" : "#1f77b4";
        case FunctionKind::Split: return "#ff7f0e";
        case FunctionKind::Absorb: return "#2b2b2b";
    }
    return "#c8c8c8";
}

}  // namespace

std::string renderSvg(const Floorplan& fp, const FunctionMap& functions, const SimResult* sim) {
    const auto [lo, hi] = fp.bounds();
    const double width = (hi.x - lo.x) * kScale + 2 * kMargin;
    const double height = (hi.y - lo.y) * kScale + 2 * kMargin;
    // SVG y grows downwards; flip so +y points up.
    auto px = [&](const Vec3& p) { return num(kMargin + (p.x - lo.x) * kScale); };
    auto py = [&](const Vec3& p) { return num(kMargin + (hi.y - p.y) * kScale); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
       << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    if (sim) {
        double maxP = 0.0;
        for (const auto& leg : sim->legs) maxP = std::max(maxP, leg.powerW);
        os << "<g stroke=\"#2ca02c\" fill=\"none\">\n";
        for (const auto& leg : sim->legs) {
            // Clip to the floorplan rectangle (Liang-Barsky in x/y).
            const Vec3 d = leg.to - leg.from;
            double t0 = 0.0, t1 = 1.0;
            const double pq[4][2] = {{-d.x, leg.from.x - lo.x}, {d.x, hi.x - leg.from.x},
                                     {-d.y, leg.from.y - lo.y}, {d.y, hi.y - leg.from.y}};
            for (const auto& [p, q] : pq) {
                if (p == 0.0) {
                    if (q < 0.0) t1 = -1.0;
                } else if (p < 0.0) {
                    t0 = std::max(t0, q / p);
                } else {
                    t1 = std::min(t1, q / p);
                }
            }
            if (t0 > t1) continue;
            const Vec3 a = leg.from + d * t0, b = leg.from + d * t1;
            const double rel = maxP > 0.0 ? leg.powerW / maxP : 0.0;
            os << "<line x1=\"" << px(a) << "\" y1=\"" << py(a) << "\" x2=\"" << px(b) << "\" y2=\"" << py(b)
               << "\" stroke-opacity=\"" << num(0.05 + 0.6 * rel) << "\"/>\n";
        }
        os << "</g>\n";
    }

    for (const auto& w : fp.walls) {
        const Vec3 a = w.origin;
        const Vec3 b = w.origin + w.extentU + (std::abs(w.extentV.z) > 0.0 ? Vec3{} : w.extentV);
        if (w.kind == SurfaceKind::Absorber) {
            os << "<line x1=\"" << px(a) << "\" y1=\"" << py(a) << "\" x2=\"" << px(b) << "\" y2=\"" << py(b)
               << "\" stroke=\"black\" stroke-width=\"4\"/>\n";
            continue;
        }
        for (const auto& t : w.tiles()) {
            const auto it = functions.find(t.id);
            const TileFunction* f = it == functions.end() ? nullptr : &it->second;
            const Vec3 half = w.extentU * (0.5 / w.tilesU);
            const Vec3 p = t.center - half, q = t.center + half;
            os << "<line x1=\"" << px(p) << "\" y1=\"" << py(p) << "\" x2=\"" << px(q) << "\" y2=\"" << py(q)
               << "\" stroke=\"" << colour(f) << "\" stroke-width=\"8\"><title>" << to_string(t.id) << ' '
               << (f ? to_string(f->kind) : std::string("Idle")) << "</title></line>\n";
        }
    }
    for (const auto& d : fp.devices) {
        os << "<circle cx=\"" << px(d.position) << "\" cy=\"" << py(d.position) << "\" r=\"6\" fill=\""
           << (d.role == DeviceRole::TX ? "#9467bd" : "#8c564b") << "\"/>\n";
        os << "<text x=\"" << px(d.position) << "\" y=\"" << py(d.position) << "\" dx=\"8\" font-size=\"12\">"
           << (d.role == DeviceRole::TX ? "TX" : "RX") << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace pwe
