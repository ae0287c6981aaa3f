#include "pwe/scene_io.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <map>

namespace pwe {

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw SceneError(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SceneError(where + "/" + key + ": missing");
    return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_number()) throw SceneError(where + "/" + key + ": expected a number");
    return v.get<double>();
}

double numberOr(const json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    return number(obj, key, where);
}

Mat3 matFromJson(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw SceneError(where + ": expected a 3x3 array");
    Mat3 m{};
    for (int r = 0; r < 3; ++r) {
        const Vec3 row = vecFromJson(j[r], where + "/" + std::to_string(r));
        m[r] = {row.x, row.y, row.z};
    }
    return m;
}

Wall wallFromJson(const json& w, const std::string& where) {
    Wall wall;
    const json& id = field(w, "id", where);
    if (!id.is_number_integer()) throw SceneError(where + "/id: expected an integer");
    wall.id = id.get<int>();

    const json& plane = field(w, "plane", where);
    if (!plane.is_string()) throw SceneError(where + "/plane: expected a string");
    try {
        wall.frame.plane = parsePlane(plane.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw SceneError(where + "/plane: " + e.what());
    }
    wall.origin = vecFromJson(field(w, "origin", where), where + "/origin");
    wall.extentU = vecFromJson(field(w, "extent_u", where), where + "/extent_u");
    wall.extentV = vecFromJson(field(w, "extent_v", where), where + "/extent_v");

    const std::string surface = w.value("surface", std::string("SDM"));
    if (surface == "SDM")
        wall.kind = SurfaceKind::SDM;
    else if (surface == "absorber")
        wall.kind = SurfaceKind::Absorber;
    else
        throw SceneError(where + "/surface: expected \"SDM\" or \"absorber\"");

    if (w.contains("tiles")) {
        const json& t = w["tiles"];
        if (!t.is_array() || t.size() != 2 || !t[0].is_number_integer() || !t[1].is_number_integer())
            throw SceneError(where + "/tiles: expected [nu, nv]");
        wall.tilesU = t[0].get<int>();
        wall.tilesV = t[1].get<int>();
        if (wall.tilesU < 1 || wall.tilesV < 1) throw SceneError(where + "/tiles: counts must be >= 1");
    } else if (wall.kind == SurfaceKind::SDM) {
        throw SceneError(where + "/tiles: missing");
    }

    if (wall.frame.plane == Plane::General) {
        wall.frame.orientation = matFromJson(field(w, "orientation", where), where + "/orientation");
        const Vec3 n = vecFromJson(field(w, "base_normal", where), where + "/base_normal");
        if (std::abs(n.norm() - 1.0) > 1e-9) throw SceneError(where + "/base_normal: not a unit vector");
        if ((wall.frame.baseNormal() - n).norm() > 1e-9)
            throw SceneError(where + "/base_normal: does not equal orientation * (0, 1, 0)");
    }
    return wall;
}

DevicePose deviceFromJson(const json& d, const std::string& where) {
    DevicePose dev;
    const json& role = field(d, "role", where);
    if (role == "TX")
        dev.role = DeviceRole::TX;
    else if (role == "RX")
        dev.role = DeviceRole::RX;
    else
        throw SceneError(where + "/role: expected \"TX\" or \"RX\"");
    dev.position = vecFromJson(field(d, "position", where), where + "/position");
    dev.lobeWidthDeg = numberOr(d, "lobe_width_deg", dev.lobeWidthDeg, where);
    dev.pointingPhiDeg = numberOr(d, "pointing_phi_deg", 0.0, where);
    dev.pointingThetaDeg = numberOr(d, "pointing_theta_deg", 0.0, where);
    dev.txPowerDbm = numberOr(d, "tx_power_dbm", dev.txPowerDbm, where);
    if (!(dev.lobeWidthDeg > 0.0 && dev.lobeWidthDeg <= 180.0))
        throw SceneError(where + "/lobe_width_deg: must lie in (0, 180]");
    return dev;
}

json wallToJson(const Wall& w) {
    json j;
    j["id"] = w.id;
    j["plane"] = planeName(w.frame.plane);
    j["origin"] = vecToJson(w.origin);
    j["extent_u"] = vecToJson(w.extentU);
    j["extent_v"] = vecToJson(w.extentV);
    j["surface"] = w.kind == SurfaceKind::SDM ? "SDM" : "absorber";
    j["tiles"] = {w.tilesU, w.tilesV};
    if (w.frame.plane == Plane::General) {
        json m = json::array();
        for (const auto& row : w.frame.orientation) m.push_back(row);
        j["orientation"] = m;
        j["base_normal"] = vecToJson(w.frame.baseNormal());
    }
    return j;
}


// Line on which each value in the document starts, keyed by JSON pointer.
std::map<std::string, int> pointerLines(const std::string& text) {
    struct Frame {
        bool array;
        std::string path;
        int index = 0;
        bool expectKey = false;
        std::string key;
    };
    std::map<std::string, int> lines;
    std::vector<Frame> stack;
    int line = 1;
    auto valueStart = [&] {
        if (stack.empty()) return std::string();
        const Frame& f = stack.back();
        std::string p = f.path + "/" + (f.array ? std::to_string(f.index) : f.key);
        lines.emplace(p, line);
        return p;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
        } else if (c == '"') {
            std::string s;
            for (++i; i < text.size() && text[i] != '"'; ++i) {
                if (text[i] == '\\' && i + 1 < text.size()) ++i;
                s += text[i];
            }
            if (!stack.empty() && stack.back().expectKey) {
                stack.back().key = s;
                stack.back().expectKey = false;
            } else {
                valueStart();
            }
        } else if (c == '{' || c == '[') {
            const std::string p = valueStart();
            stack.push_back({c == '[', p, 0, c == '{', {}});
        } else if (c == '}' || c == ']') {
            if (!stack.empty()) stack.pop_back();
        } else if (c == ',') {
            if (!stack.empty()) {
                ++stack.back().index;
                stack.back().expectKey = !stack.back().array;
            }
        } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
            valueStart();
            while (i + 1 < text.size() && (std::isalnum(static_cast<unsigned char>(text[i + 1])) ||
                                           std::strchr("+-.", text[i + 1])))
                ++i;
        }
    }
    return lines;
}

// Prefixes a "/pointer: message" problem with the line of the deepest
// located ancestor.
std::string withLine(const std::string& problem, const std::map<std::string, int>& lines) {
    std::string ptr = problem.substr(0, problem.find(':'));
    while (!ptr.empty()) {
        if (auto it = lines.find(ptr); it != lines.end()) return "line " + std::to_string(it->second) + ": " + problem;
        ptr = ptr.substr(0, ptr.rfind('/'));
    }
    return problem;
}
}  // namespace

json vecToJson(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vecFromJson(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number())
        throw SceneError(where + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Floorplan floorplanFromJson(const json& j) {
    Floorplan fp;
    fp.ceilingHeight = number(j, "ceiling_height", "");
    const json& walls = field(j, "walls", "");
    if (!walls.is_array()) throw SceneError("/walls: expected an array");
    for (std::size_t i = 0; i < walls.size(); ++i) fp.walls.push_back(wallFromJson(walls[i], "/walls/" + std::to_string(i)));
    const json& devices = field(j, "devices", "");
    if (!devices.is_array()) throw SceneError("/devices: expected an array");
    for (std::size_t i = 0; i < devices.size(); ++i)
        fp.devices.push_back(deviceFromJson(devices[i], "/devices/" + std::to_string(i)));
    try {
        validateFloorplan(fp);
    } catch (const std::invalid_argument& e) {
        throw SceneError(e.what());
    }
    return fp;
}

json floorplanToJson(const Floorplan& fp) {
    json j;
    j["ceiling_height"] = fp.ceilingHeight;
    j["walls"] = json::array();
    for (const auto& w : fp.walls) j["walls"].push_back(wallToJson(w));
    j["devices"] = json::array();
    for (const auto& d : fp.devices) {
        json dj;
        dj["role"] = d.role == DeviceRole::TX ? "TX" : "RX";
        dj["position"] = vecToJson(d.position);
        dj["lobe_width_deg"] = d.lobeWidthDeg;
        dj["pointing_phi_deg"] = d.pointingPhiDeg;
        dj["pointing_theta_deg"] = d.pointingThetaDeg;
        if (d.role == DeviceRole::TX) dj["tx_power_dbm"] = d.txPowerDbm;
        j["devices"].push_back(dj);
    }
    return j;
}

json readJsonFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw SceneError(path + ": " + e.what());
    }
}

void writeJsonFile(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

Floorplan loadFloorplan(const std::string& path) { return floorplanFromJson(readJsonFile(path)); }

void saveFloorplan(const Floorplan& fp, const std::string& path) { writeJsonFile(floorplanToJson(fp), path); }

std::vector<std::string> validateSceneText(const std::string& text) {
    std::vector<std::string> problems;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        problems.emplace_back(e.what());
        return problems;
    }
    Floorplan fp;
    bool ceilingOk = true;
    try {
        fp.ceilingHeight = number(j, "ceiling_height", "");
    } catch (const SceneError& e) {
        problems.emplace_back(e.what());
        ceilingOk = false;
    }
    // Geometry checks run on the elements that parsed; their positions map
    // back to document indices.
    std::map<std::string, std::vector<std::size_t>> docIndex;
    for (const char* key : {"walls", "devices"}) {
        if (!j.is_object() || !j.contains(key) || !j[key].is_array()) {
            problems.emplace_back(std::string("/") + key + ": expected an array");
            continue;
        }
        const json& arr = j[key];
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string where = std::string("/") + key + "/" + std::to_string(i);
            try {
                if (std::string(key) == "walls")
                    fp.walls.push_back(wallFromJson(arr[i], where));
                else
                    fp.devices.push_back(deviceFromJson(arr[i], where));
                docIndex[key].push_back(i);
            } catch (const SceneError& e) {
                problems.emplace_back(e.what());
            }
        }
    }
    const bool wallsMissing = !j.is_object() || !j.contains("walls") || !j["walls"].is_array() ||
                              docIndex["walls"].size() != j["walls"].size();
    for (auto& p : floorplanProblems(fp)) {
        if (!ceilingOk && p.starts_with("/ceiling_height")) continue;
        // The volume is unknown while some wall failed to parse.
        if (p.ends_with("outside the floorplan volume") && wallsMissing) continue;
        for (const auto& [key, idx] : docIndex) {
            const std::string prefix = "/" + key + "/";
            if (!p.starts_with(prefix)) continue;
            const std::size_t end = p.find_first_of("/:", prefix.size());
            const std::size_t k = std::stoul(p.substr(prefix.size(), end - prefix.size()));
            p = prefix + std::to_string(idx[k]) + p.substr(end);
        }
        problems.push_back(std::move(p));
    }
    const auto lines = pointerLines(text);
    for (auto& p : problems) p = withLine(p, lines);
    return problems;
}

}  // namespace pwe
