#include "cylweb/circle.hpp"

#include <limits>

namespace cylweb {

namespace {
constexpr double kFourPiSq = 39.478417604357434475337963999505;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

WindingFn winding_standard() {
    WindingFn f;
    f.tag = WindingFn::Tag::Standard;
    f.forward = [](double r) { return r / kFourPiSq; };
    f.inverse = [](double h) { return kFourPiSq * h; };
    f.h_lo = 0.0;
    f.h_hi = kInf;
    return f;
}

WindingFn winding_log() {
    WindingFn f;
    f.tag = WindingFn::Tag::Log;
    f.forward = [](double r) { return std::log(r); };
    f.inverse = [](double h) { return std::exp(h); };
    f.h_lo = -kInf;
    f.h_hi = kInf;
    return f;
}

WindingFn winding_arctan() {
    WindingFn f;
    f.tag = WindingFn::Tag::Arctan;
    f.forward = [](double r) { return (2.0 / 3.141592653589793238462643383280) * std::atan(r); };
    f.inverse = [](double h) { return std::tan(h * 3.141592653589793238462643383280 / 2.0); };
    f.h_lo = 0.0;
    f.h_hi = 1.0;
    f.h_hi_open = true;
    return f;
}

WindingFn winding_custom(std::function<double(double)> forward,
                         std::function<double(double)> inverse,
                         double h_lo, double h_hi, bool h_lo_open, bool h_hi_open) {
    if (!forward || !inverse) {
        throw std::invalid_argument("winding_custom: both directions are required");
    }
    WindingFn f;
    f.tag = WindingFn::Tag::Custom;
    f.forward = std::move(forward);
    f.inverse = std::move(inverse);
    f.h_lo = h_lo;
    f.h_hi = h_hi;
    f.h_lo_open = h_lo_open;
    f.h_hi_open = h_hi_open;
    return f;
}

WindingFn winding_by_name(const std::string& name) {
    if (name == "standard") return winding_standard();
    if (name == "log") return winding_log();
    if (name == "arctan") return winding_arctan();
    throw std::invalid_argument("unknown winding function: " + name);
}

RadialPoint project_star(const CylPoint& p) {
    if (p.t < 0.0) throw std::invalid_argument("project_star: height must be >= 0");
    return RadialPoint{kTwoPi * p.x.x, kFourPiSq * p.t};
}

RadialPoint project_with(const CylPoint& p, const WindingFn& f) {
    if (!f.height_in_range(p.t)) {
        throw std::out_of_range("project_with: height outside winding range");
    }
    return RadialPoint{kTwoPi * p.x.x, f.inverse(p.t)};
}

}  // namespace cylweb
