#include "pwe/fit.hpp"

#include <algorithm>
#include <limits>

namespace pwe {

namespace {

constexpr double kDomain = 90.0;  // degrees, both active axes
constexpr double kGolden = 0.6180339887498949;

class Objective {
public:
    Objective(const SurfaceFrame& frame, std::span<const Vec3> dIn, std::span<const double> shares,
              std::span<const Vec3> oOut, std::span<const double> target)
        : frame_(frame), dIn_(dIn), shares_(shares), oOut_(oOut), target_(target) {}

    double operator()(double aDeg, double bDeg) const {
        const Vec3 n = virtualNormal(frame_, fromActive(frame_.plane, deg2rad(aDeg), deg2rad(bDeg)));
        const auto w = powerFractions(n, dIn_, shares_, oOut_);
        return weightRmse(w, target_);
    }

private:
    const SurfaceFrame& frame_;
    std::span<const Vec3> dIn_;
    std::span<const double> shares_;
    std::span<const Vec3> oOut_;
    std::span<const double> target_;
};

struct Best {
    double a = 0.0;
    double b = 0.0;
    double err = 0.0;

    void offer(double na, double nb, double e) {
        if (e < err) {
            a = na;
            b = nb;
            err = e;
        }
    }
};

void gridSearch(const Objective& f, Best& best, double aLo, double aHi, double bLo, double bHi, double step) {
    aLo = std::max(aLo, -kDomain);
    bLo = std::max(bLo, -kDomain);
    aHi = std::min(aHi, kDomain);
    bHi = std::min(bHi, kDomain);
    const int na = static_cast<int>(std::floor((aHi - aLo) / step + 1e-9));
    const int nb = static_cast<int>(std::floor((bHi - bLo) / step + 1e-9));
    for (int i = 0; i <= na; ++i) {
        const double a = aLo + i * step;
        for (int j = 0; j <= nb; ++j) {
            const double b = bLo + j * step;
            best.offer(a, b, f(a, b));
        }
    }
}

// Golden-section line search along one axis, keeping the result only if it
// improves on the incumbent.
void goldenAxis(const Objective& f, Best& best, int axis, double radius, double tol) {
    auto eval = [&](double x) { return axis == 0 ? f(x, best.b) : f(best.a, x); };
    const double centre = axis == 0 ? best.a : best.b;
    double lo = std::max(centre - radius, -kDomain);
    double hi = std::min(centre + radius, kDomain);
    double x1 = hi - kGolden * (hi - lo);
    double x2 = lo + kGolden * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    while (hi - lo > tol) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kGolden * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kGolden * (hi - lo);
            f2 = eval(x2);
        }
    }
    const double x = 0.5 * (lo + hi);
    const double e = eval(x);
    if (axis == 0)
        best.offer(x, best.b, e);
    else
        best.offer(best.a, x, e);
}

void refine(const Objective& f, Best& best, double radius, double tol) {
    for (int pass = 0; pass < 2; ++pass) {
        goldenAxis(f, best, 0, radius, tol);
        goldenAxis(f, best, 1, radius, tol);
    }
}

// Smallest error any realizable weight vector can reach when there is a
// single outgoing link: the weight is then either 0 or 1.
std::optional<double> singleLinkBound(std::span<const double> target) {
    if (target.size() != 1) return std::nullopt;
    return std::min(std::abs(target[0]), std::abs(1.0 - target[0]));
}

}  // namespace

std::vector<double> powerFractions(const Vec3& n, std::span<const Vec3> dIn, std::span<const double> shares,
                                   std::span<const Vec3> oOut) {
    std::vector<double> raw(oOut.size(), 0.0);
    const double equal = dIn.empty() ? 0.0 : 1.0 / static_cast<double>(dIn.size());
    for (std::size_t i = 0; i < dIn.size(); ++i) {
        const double s = shares.empty() ? equal : shares[i];
        if (s == 0.0) continue;
        const Vec3 r = reflect(dIn[i], n);
        for (std::size_t o = 0; o < oOut.size(); ++o) raw[o] += s * std::max(r.dot(oOut[o]), 0.0);
    }
    double total = 0.0;
    for (double v : raw) total += v;
    if (total > 0.0)
        for (double& v : raw) v /= total;
    else
        std::fill(raw.begin(), raw.end(), 0.0);
    return raw;
}

double weightRmse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("weight vectors differ in length");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

FitResult fitVirtualNormal(const SurfaceFrame& frame, std::span<const Vec3> dIn, std::span<const double> shares,
                           std::span<const Vec3> oOut, std::span<const double> target, const FitOptions& opts,
                           const std::optional<RotationAngles>& current) {
    if (dIn.empty() || oOut.empty()) throw std::invalid_argument("fitVirtualNormal needs directions");
    if (target.size() != oOut.size()) throw std::invalid_argument("one target weight per outgoing direction");
    if (!shares.empty() && shares.size() != dIn.size()) throw std::invalid_argument("one share per incoming direction");

    const Objective f(frame, dIn, shares, oOut, target);
    Best best{0.0, 0.0, std::numeric_limits<double>::infinity()};

    if (opts.local && current) {
        const auto act = activeAngles(frame.plane, *current);
        best.a = std::clamp(rad2deg(act[0]), -kDomain, kDomain);
        best.b = std::clamp(rad2deg(act[1]), -kDomain, kDomain);
        best.err = f(best.a, best.b);
        const auto bound = singleLinkBound(target);
        if (best.err < 1e-12 || (bound && best.err <= *bound + 1e-12)) {
            return {*current, best.err};
        }
        const double a0 = best.a, b0 = best.b;
        gridSearch(f, best, a0 - opts.windowDeg, a0 + opts.windowDeg, b0 - opts.windowDeg, b0 + opts.windowDeg,
                   opts.gridStepDeg);
        gridSearch(f, best, -kDomain, kDomain, -kDomain, kDomain, opts.coarseStepDeg);
        refine(f, best, opts.gridStepDeg, opts.refineTolDeg);
        if (best.a == a0 && best.b == b0) return {*current, best.err};
    } else {
        // Ties resolve towards the unrotated surface.
        best.err = f(0.0, 0.0);
        gridSearch(f, best, -kDomain, kDomain, -kDomain, kDomain, opts.gridStepDeg);
        refine(f, best, opts.gridStepDeg, opts.refineTolDeg);
    }
    return {fromActive(frame.plane, deg2rad(best.a), deg2rad(best.b)), best.err};
}

RotationAngles fitVirtualNormal(std::span<const Vec3> dIn, std::span<const Vec3> oOut, std::span<const double> target) {
    return fitVirtualNormal(SurfaceFrame{}, dIn, {}, oOut, target).angles;
}

}  // namespace pwe
