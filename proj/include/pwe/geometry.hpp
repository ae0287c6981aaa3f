#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pwe {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    bool operator==(const Vec3&) const = default;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this / norm(); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Angle between two unit vectors, radians.
double angleBetween(const Vec3& a, const Vec3& b);

using Mat3 = std::array<std::array<double, 3>, 3>;

Vec3 operator*(const Mat3& m, const Vec3& v);
Mat3 operator*(const Mat3& a, const Mat3& b);
Mat3 transpose(const Mat3& m);
Mat3 identity3();

/// Wall plane tag. The suffix names the direction of the unrotated SDM normal.
enum class Plane { XZ_PosY, XZ_NegY, YZ_PosX, YZ_NegX, XY_NegZ, General };

enum class PlaneFamily { XZ, YZ, XY };

PlaneFamily planeFamily(Plane p);
std::string planeName(Plane p);
Plane parsePlane(const std::string& tag);
/// Unrotated normal of a canonical plane. Throws for Plane::General.
Vec3 canonicalNormal(Plane p);

/// Virtual rotation state of a tile. Only the two angles active for the
/// tile's wall plane are ever non-zero in computations:
///   XZ walls rotate about x (theta) and z (phi),
///   YZ walls about z (phi) and y (varphi),
///   XY walls about x (theta) and y (varphi).
/// General walls use the XZ pair in their local frame.
struct RotationAngles {
    double theta = 0.0;
    double phi = 0.0;
    double varphi = 0.0;
    bool operator==(const RotationAngles&) const = default;
};

/// The two active angles of a plane as an ordered pair (first, second).
std::array<double, 2> activeAngles(Plane p, const RotationAngles& a);
RotationAngles fromActive(Plane p, double first, double second);

/// Orientation of a tile surface: the plane tag plus, for general walls, the
/// matrix mapping the local XZ frame (normal +y) into world coordinates.
struct SurfaceFrame {
    Plane plane = Plane::XZ_PosY;
    Mat3 orientation = identity3();

    Vec3 baseNormal() const;
};

/// r = d - 2 (d.n) n. Both inputs must be unit length within 1e-9.
Vec3 reflect(const Vec3& d, const Vec3& n);

/// Rotation matrix for the plane's two active angles; the inactive angle is
/// pinned to zero. For general walls returns O R_xz O^T.
Mat3 rotationMatrix(const SurfaceFrame& frame, const RotationAngles& angles);
Mat3 rotationMatrix(Plane plane, const RotationAngles& angles);

/// Partial derivatives of rotationMatrix with respect to the first and
/// second active angle.
std::array<Mat3, 2> rotationMatrixDerivatives(const SurfaceFrame& frame, const RotationAngles& angles);

/// Normal of a virtually rotated tile. Zero angles return the base normal exactly.
Vec3 virtualNormal(const SurfaceFrame& frame, const RotationAngles& angles);

/// Surface normal n for which reflect(d, n) == o.
Vec3 steerNormal(const Vec3& d, const Vec3& o);

enum class SurfaceKind { SDM, Absorber };

struct TileId {
    int wall = 0;
    int index = 0;
    auto operator<=>(const TileId&) const = default;
};

std::string to_string(const TileId& id);

struct Tile {
    TileId id;
    Vec3 center;
    double du = 1.0;
    double dv = 1.0;
    SurfaceFrame frame;
    RotationAngles angles;

    Vec3 baseNormal() const { return frame.baseNormal(); }
};

Vec3 virtualNormal(const Tile& tile);

struct Wall {
    int id = 0;
    SurfaceFrame frame;
    Vec3 origin;
    Vec3 extentU;
    Vec3 extentV;
    int tilesU = 1;
    int tilesV = 1;
    SurfaceKind kind = SurfaceKind::SDM;

    Vec3 normal() const { return frame.baseNormal(); }
    Vec3 centroid() const { return origin + extentU * 0.5 + extentV * 0.5; }
    int tileCount() const { return kind == SurfaceKind::SDM ? tilesU * tilesV : 0; }
    /// Tile j of the wall, row-major along U then V.
    Tile tile(int index) const;
    std::vector<Tile> tiles() const;

    /// Ray/segment parameter t where origin + t*dir meets the wall rectangle.
    std::optional<double> intersect(const Vec3& from, const Vec3& dir) const;
    /// Index of the tile containing a point on the wall plane, if any.
    std::optional<int> tileAt(const Vec3& p) const;
};

enum class DeviceRole { TX, RX };

struct DevicePose {
    Vec3 position;
    double lobeWidthDeg = 40.0;
    double pointingPhiDeg = 0.0;    // elevation above the horizontal plane
    double pointingThetaDeg = 0.0;  // azimuth measured from +y towards +x
    DeviceRole role = DeviceRole::TX;
    double txPowerDbm = -30.0;

    Vec3 boresight() const;
};

struct Floorplan {
    std::vector<Wall> walls;
    double ceilingHeight = 3.0;
    std::vector<DevicePose> devices;

    const Wall& wall(int id) const;
    const Tile tile(const TileId& id) const;
    std::vector<Tile> sdmTiles() const;
    const DevicePose& device(DeviceRole role) const;
    /// Axis-aligned bounds of all walls, z clamped to [0, ceiling].
    std::pair<Vec3, Vec3> bounds() const;
};

/// True iff the open segment (a, b) crosses no wall outside `ignore`.
bool losVisible(const Vec3& a, const Vec3& b, const Floorplan& fp, const std::set<int>& ignore = {});

/// LOS between two tile centres with both tiles facing each other.
bool tilesLinked(const Tile& a, const Tile& b, const Floorplan& fp);

/// LOS between a device and a tile, with the device in front of the tile.
bool deviceSeesTile(const Vec3& device, const Tile& t, const Floorplan& fp);

/// Every geometry problem, each prefixed with the JSON pointer of the
/// offending scene element.
std::vector<std::string> floorplanProblems(const Floorplan& fp);
/// Throws std::invalid_argument with the first problem.
void validateFloorplan(const Floorplan& fp);

}  // namespace pwe
