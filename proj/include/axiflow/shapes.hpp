#pragma once

// Initial generating curves. Nodes are equidistributed in arc length and ordered so
// that nu = -tau^perp is the outer normal (clockwise in the (r, z) half-plane).

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "geometry.hpp"

namespace axiflow {

namespace shape {

/// Width x height x width rounded cylinder: radius w/2, two hemispherical caps.
struct RoundedCylinder {
    double width = 1.0;
    double height = 7.0;
};
/// Flat cylinder of radius (d - h)/2 with a half-circle rim of radius h/2.
struct Disc {
    double diameter = 9.0;
    double height = 1.0;
};
struct Torus {
    double major_radius = 1.0;
    double minor_radius = 0.25;
};
/// Film of thickness `height` on the plane z = 0 around a central hole, with half-circle
/// rims on both edges. The inner edge slides on the plane, the outer edge is fixed.
struct DiscWithHole {
    double outer_diameter = 83.5;
    double hole_diameter = 2.5;
    double height = 1.0;
    double rho = -0.5;
};
/// Upper profile of a disc sitting on the plane z = 0, from the axis to the contact line.
struct HalfDiscDroplet {
    double diameter = 2.0;
    double height = 1.0;
    double rho = 0.0;
};
/// r(z) = radius + amplitude |sum_k sin(k z)|, z in [0, length], between two planes.
struct PerturbedCylinder {
    double radius = 1.0;
    double length = 12.0 * std::numbers::pi;
    double amplitude = 0.01;
    std::vector<double> modes{2.0, 13.0 / 6.0, 7.0 / 3.0, 5.0 / 2.0, 8.0 / 3.0, 17.0 / 6.0};
};
struct Sphere {
    double radius = 1.0;
};

} // namespace shape

using ShapeKind = std::variant<shape::RoundedCylinder, shape::Disc, shape::Torus, shape::DiscWithHole,
                               shape::HalfDiscDroplet, shape::PerturbedCylinder, shape::Sphere>;

struct ShapeSpec {
    ShapeKind kind = shape::Sphere{};
    std::size_t elements = 128;  ///< J
};

namespace detail {

/// Straight line or clockwise circular arc.
struct PathSegment {
    bool arc = false;
    Vec2 p0, p1;
    Vec2 center;
    double radius = 0.0, theta0 = 0.0, theta1 = 0.0;

    static PathSegment line(Vec2 a, Vec2 b) { return {false, a, b, {}, 0.0, 0.0, 0.0}; }
    static PathSegment clockwise_arc(Vec2 c, double r, double from, double to) {
        return {true, {}, {}, c, r, from, to};
    }

    double length() const { return arc ? radius * (theta0 - theta1) : (p1 - p0).norm(); }
    Vec2 at(double s) const {
        if (!arc) return p0 + (p1 - p0) * (s / length());
        const double th = theta0 - s / radius;
        return center + radius * Vec2(std::cos(th), std::sin(th));
    }
};

/// Places J (+1 for open) nodes at equal arc length along a piecewise path.
inline std::vector<Vec2> sample_path(const std::vector<PathSegment>& path, std::size_t J, bool closed) {
    double total = 0.0;
    for (const auto& s : path) total += s.length();
    const std::size_t count = closed ? J : J + 1;
    std::vector<Vec2> out;
    out.reserve(count);
    std::size_t seg = 0;
    double seg_start = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        const double s = total * static_cast<double>(j) / static_cast<double>(J);
        while (seg + 1 < path.size() && s > seg_start + path[seg].length()) {
            seg_start += path[seg].length();
            ++seg;
        }
        out.push_back(path[seg].at(std::min(s - seg_start, path[seg].length())));
    }
    return out;
}

/// Equal-arc-length resampling of a densely sampled curve.
inline std::vector<Vec2> resample_polyline(const std::vector<Vec2>& dense, std::size_t J) {
    std::vector<double> cum(dense.size(), 0.0);
    for (std::size_t i = 1; i < dense.size(); ++i) cum[i] = cum[i - 1] + (dense[i] - dense[i - 1]).norm();
    std::vector<Vec2> out;
    out.reserve(J + 1);
    std::size_t i = 1;
    for (std::size_t j = 0; j <= J; ++j) {
        const double s = cum.back() * static_cast<double>(j) / static_cast<double>(J);
        while (i + 1 < dense.size() && cum[i] < s) ++i;
        const double t = (s - cum[i - 1]) / (cum[i] - cum[i - 1]);
        out.push_back(dense[i - 1] + std::clamp(t, 0.0, 1.0) * (dense[i] - dense[i - 1]));
    }
    return out;
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw Error("invalid shape: " + msg);
}

} // namespace detail

/// Curve and boundary classification for a shape.
inline std::pair<Curve, BoundarySpec> generate(const ShapeSpec& spec) {
    using detail::PathSegment;
    using detail::require;
    constexpr double pi = std::numbers::pi;
    const std::size_t J = spec.elements;
    require(J >= 3, "need at least 3 elements");

    Curve curve;
    BoundarySpec bspec;
    bool check_volume = true;
    const auto axis = Endpoint{EndpointClass::Axis, 0.0};

    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, shape::Sphere>) {
                require(s.radius > 0, "radius must be positive");
                curve.nodes = detail::sample_path({PathSegment::clockwise_arc({0, 0}, s.radius, pi / 2, -pi / 2)}, J, false);
                bspec = BoundarySpec::open(axis, axis);
            } else if constexpr (std::is_same_v<T, shape::RoundedCylinder>) {
                require(s.width > 0 && s.height >= s.width, "need 0 < width <= height");
                const double R = s.width / 2, top = s.height / 2 - R;
                curve.nodes = detail::sample_path({PathSegment::clockwise_arc({0, top}, R, pi / 2, 0),
                                                   PathSegment::line({R, top}, {R, -top}),
                                                   PathSegment::clockwise_arc({0, -top}, R, 0, -pi / 2)},
                                                  J, false);
                bspec = BoundarySpec::open(axis, axis);
            } else if constexpr (std::is_same_v<T, shape::Disc>) {
                require(s.height > 0 && s.diameter > s.height, "need 0 < height < diameter");
                const double a = (s.diameter - s.height) / 2, c = s.height / 2;
                curve.nodes = detail::sample_path({PathSegment::line({0, c}, {a, c}),
                                                   PathSegment::clockwise_arc({a, 0}, c, pi / 2, -pi / 2),
                                                   PathSegment::line({a, -c}, {0, -c})},
                                                  J, false);
                bspec = BoundarySpec::open(axis, axis);
            } else if constexpr (std::is_same_v<T, shape::Torus>) {
                require(s.minor_radius > 0 && s.major_radius > s.minor_radius, "need 0 < minor < major radius");
                curve.topology = Topology::Closed;
                curve.nodes = detail::sample_path(
                    {PathSegment::clockwise_arc({s.major_radius, 0}, s.minor_radius, pi / 2, pi / 2 - 2 * pi)}, J, true);
                bspec = BoundarySpec::none();
            } else if constexpr (std::is_same_v<T, shape::DiscWithHole>) {
                require(s.height > 0 && s.hole_diameter > 0, "need positive height and hole diameter");
                require(s.hole_diameter < s.outer_diameter, "hole diameter must be below outer diameter");
                const double rh = s.hole_diameter / 2, ro = s.outer_diameter / 2, c = s.height / 2;
                require(rh + 2 * c < ro - c, "film too narrow for its rims");
                curve.nodes = detail::sample_path({PathSegment::clockwise_arc({rh + c, c}, c, -pi / 2, -3 * pi / 2),
                                                   PathSegment::line({rh + c, s.height}, {ro - c, s.height}),
                                                   PathSegment::clockwise_arc({ro - c, c}, c, pi / 2, -pi / 2)},
                                                  J, false);
                bspec = BoundarySpec::open({EndpointClass::Plane, s.rho}, {EndpointClass::Fixed, 0.0});
                check_volume = false;
            } else if constexpr (std::is_same_v<T, shape::HalfDiscDroplet>) {
                require(s.diameter > 0 && s.height > 0, "need positive dimensions");
                const double R = s.diameter / 2, c = std::min(s.height, R) / 2;
                curve.nodes = detail::sample_path({PathSegment::line({0, s.height}, {R - c, s.height}),
                                                   PathSegment::clockwise_arc({R - c, s.height - c}, c, pi / 2, 0),
                                                   PathSegment::line({R, s.height - c}, {R, 0})},
                                                  J, false);
                bspec = BoundarySpec::open(axis, {EndpointClass::Plane, s.rho});
            } else if constexpr (std::is_same_v<T, shape::PerturbedCylinder>) {
                require(s.radius > 0 && s.length > 0 && s.amplitude >= 0, "need positive radius and length");
                require(s.amplitude * static_cast<double>(s.modes.size()) < s.radius, "perturbation reaches the axis");
                const std::size_t dense_n = std::max<std::size_t>(200 * J, 20000);
                std::vector<Vec2> dense(dense_n + 1);
                for (std::size_t i = 0; i <= dense_n; ++i) {
                    const double z = s.length * (1.0 - static_cast<double>(i) / static_cast<double>(dense_n));
                    double sum = 0.0;
                    for (double k : s.modes) sum += std::sin(k * z);
                    dense[i] = {s.radius + s.amplitude * std::abs(sum), z};
                }
                curve.nodes = detail::resample_polyline(dense, J);
                curve.nodes.front().y() = s.length;
                curve.nodes.back().y() = 0.0;
                bspec = BoundarySpec::open({EndpointClass::Plane, 0.0}, {EndpointClass::Plane, 0.0});
            }
        },
        spec.kind);

    if (!curve.closed()) {
        for (int p = 0; p < 2; ++p)
            if (bspec.end(p).kind == EndpointClass::Axis) curve.nodes[endpoint_node(curve, p)].x() = 0.0;
    }
    validate(curve, bspec);
    if (check_volume && !(discrete_volume(curve, bspec) > 0.0))
        throw Error("generated curve is not outward oriented");
    return {std::move(curve), std::move(bspec)};
}

} // namespace axiflow
