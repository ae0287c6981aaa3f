#include "pwe/geometry.hpp"

#include <algorithm>
#include <limits>

namespace pwe {

namespace {

constexpr double kUnitTol = 1e-9;
// Parametric slack that keeps segment endpoints lying on their own wall from
// registering as crossings.
constexpr double kSegmentEps = 1e-9;

void requireUnit(const Vec3& v, const char* what) {
    if (std::abs(v.norm() - 1.0) > kUnitTol) {
        throw std::invalid_argument(std::string(what) + " must be a unit vector");
    }
}

Mat3 rotX(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{1, 0, 0}, {0, c, -s}, {0, s, c}}};
}
Mat3 rotY(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
}
Mat3 rotZ(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{c, -s, 0}, {s, c, 0}, {0, 0, 1}}};
}
Mat3 drotX(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{0, 0, 0}, {0, -s, -c}, {0, c, -s}}};
}
Mat3 drotY(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{-s, 0, c}, {0, 0, 0}, {-c, 0, -s}}};
}
Mat3 drotZ(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{{-s, -c, 0}, {c, -s, 0}, {0, 0, 0}}};
}

}  // namespace

double angleBetween(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

Vec3 operator*(const Mat3& m, const Vec3& v) {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
    return r;
}

Mat3 transpose(const Mat3& m) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i][j] = m[j][i];
    return r;
}

Mat3 identity3() { return {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}; }

PlaneFamily planeFamily(Plane p) {
    switch (p) {
        case Plane::XZ_PosY:
        case Plane::XZ_NegY:
        case Plane::General:
            return PlaneFamily::XZ;
        case Plane::YZ_PosX:
        case Plane::YZ_NegX:
            return PlaneFamily::YZ;
        case Plane::XY_NegZ:
            return PlaneFamily::XY;
    }
    throw std::invalid_argument("invalid plane tag");
}

std::string planeName(Plane p) {
    switch (p) {
        case Plane::XZ_PosY: return "XZ+Y";
        case Plane::XZ_NegY: return "XZ-Y";
        case Plane::YZ_PosX: return "YZ+X";
        case Plane::YZ_NegX: return "YZ-X";
        case Plane::XY_NegZ: return "XY-Z";
        case Plane::General: return "general";
    }
    throw std::invalid_argument("invalid plane tag");
}

Plane parsePlane(const std::string& tag) {
    for (Plane p : {Plane::XZ_PosY, Plane::XZ_NegY, Plane::YZ_PosX, Plane::YZ_NegX, Plane::XY_NegZ,
                    Plane::General}) {
        if (planeName(p) == tag) return p;
    }
    throw std::invalid_argument("unknown plane tag '" + tag + "'");
}

Vec3 canonicalNormal(Plane p) {
    switch (p) {
        case Plane::XZ_PosY: return {0, 1, 0};
        case Plane::XZ_NegY: return {0, -1, 0};
        case Plane::YZ_PosX: return {1, 0, 0};
        case Plane::YZ_NegX: return {-1, 0, 0};
        case Plane::XY_NegZ: return {0, 0, -1};
        case Plane::General: break;
    }
    throw std::invalid_argument("general plane has no canonical normal");
}

std::array<double, 2> activeAngles(Plane p, const RotationAngles& a) {
    switch (planeFamily(p)) {
        case PlaneFamily::XZ: return {a.theta, a.phi};
        case PlaneFamily::YZ: return {a.phi, a.varphi};
        case PlaneFamily::XY: return {a.theta, a.varphi};
    }
    return {0, 0};
}

RotationAngles fromActive(Plane p, double first, double second) {
    switch (planeFamily(p)) {
        case PlaneFamily::XZ: return {first, second, 0.0};
        case PlaneFamily::YZ: return {0.0, first, second};
        case PlaneFamily::XY: return {first, 0.0, second};
    }
    return {};
}

Vec3 SurfaceFrame::baseNormal() const {
    if (plane == Plane::General) return orientation * Vec3{0, 1, 0};
    return canonicalNormal(plane);
}

Vec3 reflect(const Vec3& d, const Vec3& n) {
    requireUnit(d, "incident direction");
    requireUnit(n, "surface normal");
    return d - n * (2.0 * d.dot(n));
}

Mat3 rotationMatrix(Plane plane, const RotationAngles& angles) {
    const auto [a, b] = activeAngles(plane, angles);
    switch (planeFamily(plane)) {
        case PlaneFamily::XZ: return rotX(a) * rotZ(b);  // theta, phi
        case PlaneFamily::YZ: return rotY(b) * rotZ(a);  // phi, varphi
        case PlaneFamily::XY: return rotX(a) * rotY(b);  // theta, varphi
    }
    return identity3();
}

Mat3 rotationMatrix(const SurfaceFrame& frame, const RotationAngles& angles) {
    const Mat3 local = rotationMatrix(frame.plane, angles);
    if (frame.plane != Plane::General) return local;
    return frame.orientation * local * transpose(frame.orientation);
}

std::array<Mat3, 2> rotationMatrixDerivatives(const SurfaceFrame& frame, const RotationAngles& angles) {
    const auto [a, b] = activeAngles(frame.plane, angles);
    std::array<Mat3, 2> out{};
    switch (planeFamily(frame.plane)) {
        case PlaneFamily::XZ:
            out = {drotX(a) * rotZ(b), rotX(a) * drotZ(b)};
            break;
        case PlaneFamily::YZ:
            out = {rotY(b) * drotZ(a), drotY(b) * rotZ(a)};
            break;
        case PlaneFamily::XY:
            out = {drotX(a) * rotY(b), rotX(a) * drotY(b)};
            break;
    }
    if (frame.plane == Plane::General) {
        const Mat3 ot = transpose(frame.orientation);
        for (auto& m : out) m = frame.orientation * m * ot;
    }
    return out;
}

Vec3 virtualNormal(const SurfaceFrame& frame, const RotationAngles& angles) {
    const Vec3 base = frame.baseNormal();
    const auto [a, b] = activeAngles(frame.plane, angles);
    if (a == 0.0 && b == 0.0) return base;
    return (rotationMatrix(frame, angles) * base).normalized();
}

Vec3 virtualNormal(const Tile& tile) { return virtualNormal(tile.frame, tile.angles); }

Vec3 steerNormal(const Vec3& d, const Vec3& o) {
    Vec3 u = o - d;
    const double len = u.norm();
    if (len < 1e-12) {
        // No deflection requested: any normal perpendicular to d passes it through.
        Vec3 helper = std::abs(d.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        return d.cross(helper).normalized();
    }
    return u / len;
}

std::string to_string(const TileId& id) {
    return std::to_string(id.wall) + ":" + std::to_string(id.index);
}

Tile Wall::tile(int index) const {
    if (index < 0 || index >= tilesU * tilesV) throw std::out_of_range("tile index out of range");
    const int iu = index % tilesU;
    const int iv = index / tilesU;
    Tile t;
    t.id = {id, index};
    t.center = origin + extentU * ((iu + 0.5) / tilesU) + extentV * ((iv + 0.5) / tilesV);
    t.du = extentU.norm() / tilesU;
    t.dv = extentV.norm() / tilesV;
    t.frame = frame;
    return t;
}

std::vector<Tile> Wall::tiles() const {
    std::vector<Tile> out;
    for (int j = 0; j < tileCount(); ++j) out.push_back(tile(j));
    return out;
}

std::optional<double> Wall::intersect(const Vec3& from, const Vec3& dir) const {
    const Vec3 n = extentU.cross(extentV);
    const double denom = dir.dot(n);
    if (std::abs(denom) < 1e-15) return std::nullopt;
    const double t = (origin - from).dot(n) / denom;
    const Vec3 p = from + dir * t - origin;
    const double u = p.dot(extentU) / extentU.dot(extentU);
    const double v = p.dot(extentV) / extentV.dot(extentV);
    constexpr double e = 1e-12;
    if (u < -e || u > 1 + e || v < -e || v > 1 + e) return std::nullopt;
    return t;
}

std::optional<int> Wall::tileAt(const Vec3& point) const {
    if (kind != SurfaceKind::SDM) return std::nullopt;
    const Vec3 p = point - origin;
    const double u = p.dot(extentU) / extentU.dot(extentU);
    const double v = p.dot(extentV) / extentV.dot(extentV);
    constexpr double e = 1e-9;
    if (u < -e || u > 1 + e || v < -e || v > 1 + e) return std::nullopt;
    const int iu = std::clamp(static_cast<int>(u * tilesU), 0, tilesU - 1);
    const int iv = std::clamp(static_cast<int>(v * tilesV), 0, tilesV - 1);
    return iv * tilesU + iu;
}

Vec3 DevicePose::boresight() const {
    const double el = deg2rad(pointingPhiDeg);
    const double az = deg2rad(pointingThetaDeg);
    return Vec3{std::sin(az) * std::cos(el), std::cos(az) * std::cos(el), std::sin(el)}.normalized();
}

const Wall& Floorplan::wall(int id) const {
    for (const auto& w : walls)
        if (w.id == id) return w;
    throw std::out_of_range("no wall with id " + std::to_string(id));
}

const Tile Floorplan::tile(const TileId& id) const { return wall(id.wall).tile(id.index); }

std::vector<Tile> Floorplan::sdmTiles() const {
    std::vector<Tile> out;
    for (const auto& w : walls) {
        auto ts = w.tiles();
        out.insert(out.end(), ts.begin(), ts.end());
    }
    return out;
}

const DevicePose& Floorplan::device(DeviceRole role) const {
    for (const auto& d : devices)
        if (d.role == role) return d;
    throw std::out_of_range(role == DeviceRole::TX ? "floorplan has no TX" : "floorplan has no RX");
}

std::pair<Vec3, Vec3> Floorplan::bounds() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    Vec3 lo{inf, inf, 0.0}, hi{-inf, -inf, ceilingHeight};
    for (const auto& w : walls) {
        for (const Vec3& c : {w.origin, w.origin + w.extentU, w.origin + w.extentV,
                              w.origin + w.extentU + w.extentV}) {
            lo.x = std::min(lo.x, c.x);
            lo.y = std::min(lo.y, c.y);
            hi.x = std::max(hi.x, c.x);
            hi.y = std::max(hi.y, c.y);
        }
    }
    return {lo, hi};
}

bool losVisible(const Vec3& a, const Vec3& b, const Floorplan& fp, const std::set<int>& ignore) {
    const Vec3 dir = b - a;
    for (const auto& w : fp.walls) {
        if (ignore.contains(w.id)) continue;
        const auto t = w.intersect(a, dir);
        if (t && *t > kSegmentEps && *t < 1.0 - kSegmentEps) return false;
    }
    return true;
}

bool tilesLinked(const Tile& a, const Tile& b, const Floorplan& fp) {
    if (a.id.wall == b.id.wall) return false;
    const Vec3 ab = b.center - a.center;
    if (ab.dot(a.baseNormal()) <= 1e-9 || (-ab).dot(b.baseNormal()) <= 1e-9) return false;
    return losVisible(a.center, b.center, fp, {a.id.wall, b.id.wall});
}

bool deviceSeesTile(const Vec3& device, const Tile& t, const Floorplan& fp) {
    if ((device - t.center).dot(t.baseNormal()) <= 1e-9) return false;
    return losVisible(device, t.center, fp, {t.id.wall});
}

std::vector<std::string> floorplanProblems(const Floorplan& fp) {
    std::vector<std::string> out;
    if (fp.ceilingHeight <= 0) out.push_back("/ceiling_height: must be positive");
    std::set<int> ids;
    for (std::size_t i = 0; i < fp.walls.size(); ++i) {
        const Wall& w = fp.walls[i];
        const std::string at = "/walls/" + std::to_string(i);
        if (!ids.insert(w.id).second) out.push_back(at + "/id: duplicate wall id " + std::to_string(w.id));
        if (w.tilesU < 1 || w.tilesV < 1) out.push_back(at + "/tiles: needs at least one tile");
        if (w.extentU.norm() <= 0 || w.extentV.norm() <= 0 || std::abs(w.extentU.dot(w.extentV)) > 1e-9) {
            out.push_back(at + ": extents must be non-zero and orthogonal");
            continue;
        }
        const Vec3 n = w.normal();
        if (std::abs(n.norm() - 1.0) > 1e-9) {
            out.push_back(at + "/base_normal: normal is not unit length");
            continue;
        }
        const Vec3 geomNormal = w.extentU.cross(w.extentV).normalized();
        if (std::abs(std::abs(geomNormal.dot(n)) - 1.0) > 1e-9)
            out.push_back(at + ": normal does not match its plane");
        if (w.frame.plane == Plane::General) {
            const Mat3 oto = transpose(w.frame.orientation) * w.frame.orientation;
            bool ok = true;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) ok = ok && std::abs(oto[r][c] - (r == c ? 1.0 : 0.0)) <= 1e-9;
            if (!ok) out.push_back(at + "/orientation: matrix is not orthonormal");
        }
    }
    const auto [lo, hi] = fp.bounds();
    for (std::size_t i = 0; i < fp.devices.size(); ++i) {
        const DevicePose& d = fp.devices[i];
        const std::string at = "/devices/" + std::to_string(i);
        const Vec3& p = d.position;
        // Without a valid ceiling the volume is undefined.
        if (fp.ceilingHeight > 0 && !(p.x > lo.x && p.x < hi.x && p.y > lo.y && p.y < hi.y && p.z > lo.z && p.z < hi.z))
            out.push_back(at + "/position: device outside the floorplan volume");
        if (!(d.lobeWidthDeg > 0.0 && d.lobeWidthDeg <= 180.0))
            out.push_back(at + "/lobe_width_deg: must lie in (0, 180] degrees");
    }
    return out;
}

void validateFloorplan(const Floorplan& fp) {
    const auto problems = floorplanProblems(fp);
    if (!problems.empty()) throw std::invalid_argument(problems.front());
}

}  // namespace pwe
