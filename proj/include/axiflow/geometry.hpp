#pragma once

// Polygonal generating curves in the (r, z) half-plane and the functionals of
// the surface obtained by rotating them about the z-axis.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "errors.hpp"

namespace axiflow {

/// (r, z): x() is the distance from the axis, y() the height.
using Vec2 = Eigen::Vector2d;
using NodalField = std::vector<double>;

/// Clockwise rotation by a right angle: (a, b) -> (b, -a).
inline Vec2 perp(const Vec2& v) { return {v.y(), -v.x()}; }

enum class Topology { Open, Closed };

struct Curve {
    std::vector<Vec2> nodes;
    Topology topology = Topology::Open;

    bool closed() const { return topology == Topology::Closed; }
    std::size_t node_count() const { return nodes.size(); }
    std::size_t element_count() const {
        return closed() ? nodes.size() : (nodes.empty() ? 0 : nodes.size() - 1);
    }
    /// Node indices (left, right) of element e.
    std::array<std::size_t, 2> element_nodes(std::size_t e) const {
        return {e, closed() ? (e + 1) % nodes.size() : e + 1};
    }
    /// Uniform parameter spacing h = 1/J.
    double h() const { return 1.0 / static_cast<double>(element_count()); }
};

enum class EndpointClass { Axis, CylinderWall, Plane, Fixed };

struct Endpoint {
    EndpointClass kind = EndpointClass::Axis;
    /// Contact energy change; only meaningful on CylinderWall and Plane ends.
    double rho = 0.0;
};

/// Endpoint classification of an open curve. Closed curves carry no ends.
struct BoundarySpec {
    std::optional<std::array<Endpoint, 2>> ends;

    static BoundarySpec none() { return {}; }
    static BoundarySpec open(Endpoint first, Endpoint last) {
        return BoundarySpec{std::array<Endpoint, 2>{first, last}};
    }

    bool empty() const { return !ends.has_value(); }
    const Endpoint& end(int p) const { return (*ends)[static_cast<std::size_t>(p)]; }
};

inline const char* to_string(EndpointClass c) {
    switch (c) {
    case EndpointClass::Axis: return "axis";
    case EndpointClass::CylinderWall: return "wall";
    case EndpointClass::Plane: return "plane";
    case EndpointClass::Fixed: return "fixed";
    }
    return "?";
}

/// Node index of endpoint p (0 or 1) on an open curve.
inline std::size_t endpoint_node(const Curve& c, int p) {
    return p == 0 ? 0 : c.node_count() - 1;
}

/// Endpoint class of a node, if the node is an endpoint of an open curve.
inline std::optional<Endpoint> endpoint_at(const Curve& c, const BoundarySpec& b, std::size_t node) {
    if (c.closed() || b.empty()) return std::nullopt;
    if (node == 0) return b.end(0);
    if (node + 1 == c.node_count()) return b.end(1);
    return std::nullopt;
}

inline bool on_axis(const Curve& c, const BoundarySpec& b, std::size_t node) {
    auto e = endpoint_at(c, b, node);
    return e && e->kind == EndpointClass::Axis;
}

inline double bounding_diagonal(const Curve& c) {
    if (c.nodes.empty()) return 0.0;
    Vec2 lo = c.nodes.front(), hi = c.nodes.front();
    for (const auto& p : c.nodes) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

/// Elements shorter than this fraction of the bounding-box diagonal are degenerate.
inline constexpr double kDegenerateRelLength = 1e-14;

struct ElementGeometry {
    std::vector<double> chord;   ///< |X(q_j) - X(q_{j-1})|
    std::vector<double> speed;   ///< |X_rho| = J * chord
    std::vector<Vec2> tangent;
    std::vector<Vec2> normal;    ///< -tangent^perp
};

inline ElementGeometry element_geometry(const Curve& c) {
    const std::size_t ne = c.element_count();
    const double J = static_cast<double>(ne);
    const double floor_len = kDegenerateRelLength * bounding_diagonal(c);
    ElementGeometry g;
    g.chord.resize(ne);
    g.speed.resize(ne);
    g.tangent.resize(ne);
    g.normal.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        auto [a, b] = c.element_nodes(e);
        const Vec2 d = c.nodes[b] - c.nodes[a];
        const double len = d.norm();
        if (!(len > floor_len))
            throw DegenerateMesh("element " + std::to_string(e) + " has length " + std::to_string(len));
        g.chord[e] = len;
        g.speed[e] = J * len;
        g.tangent[e] = d / len;
        g.normal[e] = -perp(g.tangent[e]);
    }
    return g;
}

/// Checks the curve/boundary invariants; throws DegenerateMesh or Error.
inline void validate(const Curve& c, const BoundarySpec& b) {
    if (c.closed()) {
        if (!b.empty()) throw Error("closed curves take no boundary specification");
        if (c.node_count() < 3) throw Error("closed curve needs at least 3 nodes");
    } else {
        if (b.empty()) throw Error("open curve needs a boundary specification");
        if (c.node_count() < 4) throw Error("open curve needs at least 4 nodes (J >= 3)");
    }
    for (std::size_t i = 0; i < c.node_count(); ++i) {
        const double r = c.nodes[i].x();
        if (!std::isfinite(r) || !std::isfinite(c.nodes[i].y()))
            throw DegenerateMesh("node " + std::to_string(i) + " is not finite");
        if (on_axis(c, b, i)) {
            if (r != 0.0) throw Error("axis endpoint " + std::to_string(i) + " must have r = 0 exactly");
        } else if (!(r > 0.0)) {
            throw DegenerateMesh("node " + std::to_string(i) + " has r = " + std::to_string(r));
        }
    }
    if (!b.empty()) {
        for (int p = 0; p < 2; ++p) {
            const auto& ep = b.end(p);
            if ((ep.kind == EndpointClass::Axis || ep.kind == EndpointClass::Fixed) && ep.rho != 0.0)
                throw Error("contact energy given for an axis or fixed endpoint");
        }
    }
    (void)element_geometry(c);
}

/// A(X) = 2 pi sum_e |X_j - X_{j-1}| (r_{j-1} + r_j) / 2, exact for P1 curves.
inline double surface_area(const Curve& c) {
    double sum = 0.0;
    for (std::size_t e = 0; e < c.element_count(); ++e) {
        auto [a, b] = c.element_nodes(e);
        sum += 0.5 * (c.nodes[a].x() + c.nodes[b].x()) * (c.nodes[b] - c.nodes[a]).norm();
    }
    return 2.0 * std::numbers::pi * sum;
}

/// Enclosed volume of the revolved polygon. The nu.e1 |X_rho| factor equals -z_rho, so
/// each element contributes -pi dz * int r^2, with int r^2 = (ra^2 + ra rb + rb^2)/3 exactly.
/// CylinderWall endpoints add the wall-strip correction.
inline double discrete_volume(const Curve& c, const BoundarySpec& b) {
    double sum = 0.0;
    for (std::size_t e = 0; e < c.element_count(); ++e) {
        auto [ia, ib] = c.element_nodes(e);
        const double ra = c.nodes[ia].x(), rb = c.nodes[ib].x();
        const double dz = c.nodes[ib].y() - c.nodes[ia].y();
        sum -= dz * (ra * ra + ra * rb + rb * rb) / 3.0;
    }
    double vol = std::numbers::pi * sum;
    if (!b.empty()) {
        for (int p = 0; p < 2; ++p) {
            if (b.end(p).kind != EndpointClass::CylinderWall) continue;
            const Vec2& x = c.nodes[endpoint_node(c, p)];
            const double sign = (p == 0) ? -1.0 : 1.0;
            vol += std::numbers::pi * sign * x.x() * x.x() * x.y();
        }
    }
    return vol;
}

/// Contact-energy part of E(X) (zero when every rho vanishes).
inline double contact_energy(const Curve& c, const BoundarySpec& b) {
    if (b.empty()) return 0.0;
    double out = 0.0;
    for (int p = 0; p < 2; ++p) {
        const auto& ep = b.end(p);
        if (ep.rho == 0.0) continue;
        const Vec2& x = c.nodes[endpoint_node(c, p)];
        if (ep.kind == EndpointClass::CylinderWall)
            out += 2.0 * std::numbers::pi * ep.rho * x.x() * x.y();
        else if (ep.kind == EndpointClass::Plane)
            out += std::numbers::pi * ep.rho * x.x() * x.x();
    }
    return out;
}

inline double total_energy(const Curve& c, const BoundarySpec& b) {
    return surface_area(c) + contact_energy(c, b);
}

/// Longest over shortest element chord.
inline double mesh_ratio(const Curve& c) {
    if (c.element_count() < 2) throw Error("mesh ratio needs at least two elements");
    double lo = INFINITY, hi = 0.0;
    for (std::size_t e = 0; e < c.element_count(); ++e) {
        auto [a, b] = c.element_nodes(e);
        const double len = (c.nodes[b] - c.nodes[a]).norm();
        lo = std::min(lo, len);
        hi = std::max(hi, len);
    }
    if (!(lo > 0.0)) throw DegenerateMesh("zero-length element in mesh ratio");
    return hi / lo;
}

inline double min_chord(const Curve& c) {
    double lo = INFINITY;
    for (std::size_t e = 0; e < c.element_count(); ++e) {
        auto [a, b] = c.element_nodes(e);
        lo = std::min(lo, (c.nodes[b] - c.nodes[a]).norm());
    }
    return lo;
}

/// Smallest r over nodes that are not axis endpoints.
inline double min_offaxis_radius(const Curve& c, const BoundarySpec& b) {
    double lo = INFINITY;
    for (std::size_t i = 0; i < c.node_count(); ++i)
        if (!on_axis(c, b, i)) lo = std::min(lo, c.nodes[i].x());
    return lo;
}

inline double max_radius(const Curve& c) {
    double hi = 0.0;
    for (const auto& p : c.nodes) hi = std::max(hi, p.x());
    return hi;
}

} // namespace axiflow
