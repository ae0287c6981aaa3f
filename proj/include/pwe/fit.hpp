#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pwe/geometry.hpp"

namespace pwe {

/// Power fractions sent towards each outgoing direction by a surface with
/// normal n: raw_o = sum_i s_i max(reflect(d_i, n) . o, 0), normalized to sum
/// to one when any raw value is positive and all zero otherwise. `shares`
/// may be empty, meaning equal shares.
std::vector<double> powerFractions(const Vec3& n, std::span<const Vec3> dIn, std::span<const double> shares,
                                   std::span<const Vec3> oOut);

/// Root-mean-square difference between two equally sized vectors.
double weightRmse(std::span<const double> a, std::span<const double> b);

struct FitOptions {
    double gridStepDeg = 1.0;
    double refineTolDeg = 0.01;
    /// Local search mode used inside training: the current angles are tried
    /// first, then a window around them and a coarse global grid.
    bool local = false;
    double windowDeg = 5.0;
    double coarseStepDeg = 12.0;
};

struct FitResult {
    RotationAngles angles;
    double error = 0.0;
};

/// Angles over the frame's two active axes (each in [-90, 90] degrees) whose
/// power fractions best match `target` in RMSE.
FitResult fitVirtualNormal(const SurfaceFrame& frame, std::span<const Vec3> dIn, std::span<const double> shares,
                           std::span<const Vec3> oOut, std::span<const double> target, const FitOptions& opts = {},
                           const std::optional<RotationAngles>& current = std::nullopt);

/// XZ+Y tile with equal incoming shares.
RotationAngles fitVirtualNormal(std::span<const Vec3> dIn, std::span<const Vec3> oOut, std::span<const double> target);

}  // namespace pwe
