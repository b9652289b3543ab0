#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>

#include "cabb/random.hpp"

namespace cabb {

using Vec2 = std::array<double, 2>;

/// Axis-aligned rectangle stored as center + dimensions (pixels).
struct Box {
    Vec2 center{0.0, 0.0};
    Vec2 dims{1.0, 1.0};

    static Box from_corners(double x0, double y0, double x1, double y1) {
        if (!(x1 > x0) || !(y1 > y0))
            throw std::invalid_argument("Box::from_corners: corners must satisfy x0<x1, y0<y1");
        return Box{{(x0 + x1) / 2, (y0 + y1) / 2}, {x1 - x0, y1 - y0}};
    }

    double low(int d) const { return center[d] - dims[d] / 2; }
    double high(int d) const { return center[d] + dims[d] / 2; }
    double area() const { return dims[0] * dims[1]; }
};

/// Anchor-relative encoding: center offset in anchor units, size ratio.
struct Delta {
    Vec2 delta{0.0, 0.0};
    Vec2 omega{1.0, 1.0};
};

/// Crop window; in solver coordinates the origin is (0,0).
struct CropRect {
    Vec2 origin{0.0, 0.0};
    Vec2 extent{1.0, 1.0};

    double low(int d) const { return origin[d]; }
    double high(int d) const { return origin[d] + extent[d]; }
};

inline void check_positive_dims(const Box& b, const char* who) {
    if (!(b.dims[0] > 0.0) || !(b.dims[1] > 0.0))
        throw std::invalid_argument(std::string(who) + ": box dims must be positive");
}

inline Delta encode(const Box& g, const Box& a) {
    check_positive_dims(a, "encode");
    Delta r;
    for (int d = 0; d < 2; ++d) {
        r.delta[d] = (g.center[d] - a.center[d]) / a.dims[d];
        r.omega[d] = g.dims[d] / a.dims[d];
    }
    return r;
}

inline Box decode(const Box& a, const Delta& p) {
    check_positive_dims(a, "decode");
    if (!(p.omega[0] > 0.0) || !(p.omega[1] > 0.0))
        throw std::invalid_argument("decode: omega must be positive");
    Box r;
    for (int d = 0; d < 2; ++d) {
        r.center[d] = a.center[d] + p.delta[d] * a.dims[d];
        r.dims[d] = p.omega[d] * a.dims[d];
    }
    return r;
}

/// Rectangle intersection of g with the crop window. Zero-area results
/// (disjoint or edge-touching) are reported as absent.
inline std::optional<Box> crop_box(const Box& g, const CropRect& c) {
    Box r;
    for (int d = 0; d < 2; ++d) {
        const double lo = std::max(g.low(d), c.low(d));
        const double hi = std::min(g.high(d), c.high(d));
        if (!(hi > lo)) return std::nullopt;
        r.center[d] = (lo + hi) / 2;
        r.dims[d] = hi - lo;
    }
    return r;
}

inline double iou(const Box& a, const Box& b) {
    double inter = 1.0;
    for (int d = 0; d < 2; ++d) {
        const double w = std::min(a.high(d), b.high(d)) - std::max(a.low(d), b.low(d));
        if (w <= 0.0) return 0.0;
        inter *= w;
    }
    return inter / (a.area() + b.area() - inter);
}

/// Draws a random member of rho(G,C): the set of boxes whose intersection
/// with the crop equals the cropped ground truth. Sides of the cropped box
/// that touch the crop boundary are pushed outward by an exponential amount;
/// all other sides stay fixed.
inline Box sample_rho_member(const Box& g, const CropRect& c, Rng& rng,
                             double extension_mean = -1.0) {
    auto cropped = crop_box(g, c);
    if (!cropped) throw std::invalid_argument("sample_rho_member: box does not intersect crop");
    Box out = *cropped;
    for (int d = 0; d < 2; ++d) {
        const double mean = extension_mean > 0.0 ? extension_mean : c.extent[d] / 2;
        double lo = cropped->low(d);
        double hi = cropped->high(d);
        if (g.low(d) <= c.low(d)) lo -= exponential(rng, mean);
        if (g.high(d) >= c.high(d)) hi += exponential(rng, mean);
        out.center[d] = (lo + hi) / 2;
        out.dims[d] = hi - lo;
    }
    return out;
}

enum class BoxFormat { Center, Corner };

inline Box parse_box(const std::string& text, BoxFormat fmt) {
    double v[4];
    char sep[3];
    if (std::sscanf(text.c_str(), "%lf %c %lf %c %lf %c %lf", &v[0], &sep[0], &v[1], &sep[1],
                    &v[2], &sep[2], &v[3]) != 7 ||
        sep[0] != ',' || sep[1] != ',' || sep[2] != ',')
        throw std::invalid_argument("parse_box: expected four comma-separated numbers, got '" +
                                    text + "'");
    if (fmt == BoxFormat::Corner) return Box::from_corners(v[0], v[1], v[2], v[3]);
    Box b{{v[0], v[1]}, {v[2], v[3]}};
    check_positive_dims(b, "parse_box");
    return b;
}

inline std::string format_box(const Box& b, BoxFormat fmt) {
    char buf[128];
    if (fmt == BoxFormat::Corner)
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g", b.low(0), b.low(1), b.high(0),
                      b.high(1));
    else
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g", b.center[0], b.center[1], b.dims[0],
                      b.dims[1]);
    return buf;
}

} // namespace cabb
