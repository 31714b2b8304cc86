#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace cylweb {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Canonical reduction to [0,1). Every circle value passes through here so
/// repeated arithmetic cannot drift outside the range.
inline double reduce_unit(double x) {
    double r = x - std::floor(x);
    return (r >= 1.0 || r < 0.0) ? 0.0 : r;
}

/// Angle on the unit-circumference circle, kept in [0,1).
struct CirclePos {
    double x = 0.0;

    CirclePos() = default;
    explicit CirclePos(double value) : x(reduce_unit(value)) {}

    CirclePos operator+(double d) const { return CirclePos(x + d); }
    CirclePos operator-(double d) const { return CirclePos(x - d); }
    friend bool operator==(const CirclePos& a, const CirclePos& b) { return a.x == b.x; }
};

/// d(x,y) = min{|x-y|, 1-|x-y|}, the usual distance on R/Z. Always in [0,1/2].
inline double circle_dist(CirclePos a, CirclePos b) {
    double d = std::fabs(a.x - b.x);
    return std::min(d, 1.0 - d);
}

/// Counterclockwise arc length from a to b, in [0,1).
inline double ccw_arc(CirclePos a, CirclePos b) { return reduce_unit(b.x - a.x); }

/// Point on the cylinder (R/Z) x R.
struct CylPoint {
    CirclePos x;
    double t = 0.0;
    CylPoint() = default;
    CylPoint(CirclePos x_, double t_) : x(x_), t(t_) {}
    CylPoint(double x_, double t_) : x(x_), t(t_) {}
};

/// Counterclockwise arc [a -> b]. The degenerate arc [a -> a] has length 0
/// and contains only a; a full circle is represented explicitly elsewhere.
struct Arc {
    CirclePos a;
    CirclePos b;

    double length() const { return ccw_arc(a, b); }

    bool contains(CirclePos p) const {
        double len = length();
        double off = ccw_arc(a, p);
        if (len == 0.0) return off == 0.0;
        return off <= len;
    }
};

struct RadialPoint {
    double theta = 0.0;  // [0, 2*pi)
    double r = 0.0;      // >= 0
};

/// Even, 2*half_period-periodic fold: distance from x to the nearest even
/// multiple of half_period. Range [0, half_period].
inline double fold_reflect(double x, double half_period) {
    if (!(half_period > 0.0)) throw std::invalid_argument("fold_reflect: half_period must be > 0");
    double p = 2.0 * half_period;
    double y = x - p * std::floor(x / p);  // in [0, p)
    return half_period - std::fabs(y - half_period);
}

/// Monotone reparametrization between cylinder height and plane radius.
/// forward maps radius -> height (f in the projection), inverse maps
/// height -> radius. Catalog inverses are closed-form; custom functions
/// must supply both directions.
struct WindingFn {
    enum class Tag { Standard, Log, Arctan, Custom };

    Tag tag = Tag::Standard;
    std::function<double(double)> forward;
    std::function<double(double)> inverse;
    double h_lo = 0.0;  // range J of forward = admissible heights
    double h_hi = 0.0;
    bool h_lo_open = false;
    bool h_hi_open = false;

    bool height_in_range(double h) const {
        if (h_lo_open ? !(h > h_lo) : !(h >= h_lo)) return false;
        if (h_hi_open ? !(h < h_hi) : !(h <= h_hi)) return false;
        return true;
    }
};

WindingFn winding_standard();
WindingFn winding_log();
WindingFn winding_arctan();
WindingFn winding_custom(std::function<double(double)> forward,
                         std::function<double(double)> inverse,
                         double h_lo, double h_hi,
                         bool h_lo_open = false, bool h_hi_open = false);
WindingFn winding_by_name(const std::string& name);

/// phi_star: (x, t) -> (2*pi*x, 4*pi^2*t) for t >= 0.
RadialPoint project_star(const CylPoint& p);

/// General f-projection: theta = 2*pi*x, r = f.inverse(t). Throws if the
/// height lies outside the winding function's range.
RadialPoint project_with(const CylPoint& p, const WindingFn& f);

}  // namespace cylweb
