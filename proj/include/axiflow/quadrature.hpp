#pragma once

// Inner products on the parameter interval and the time-averaged weighted normal
// that makes the discrete volume update exact.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "geometry.hpp"

namespace axiflow {

/// Two-point Gauss-Legendre rule on [0, 1]; exact for cubics.
struct Gauss2 {
    static constexpr double weight = 0.5;
    static inline const std::array<double, 2> points{0.5 - 0.5 / std::numbers::sqrt3,
                                                     0.5 + 0.5 / std::numbers::sqrt3};
};

/// A field that is affine on each element and may jump at nodes, stored by its
/// one-sided limits at the element's left and right ends.
template <class T>
struct ElementwiseField {
    std::vector<std::array<T, 2>> ends;
};

namespace detail {
inline double dot(double a, double b) { return a * b; }
inline double dot(const Vec2& a, const Vec2& b) { return a.dot(b); }
} // namespace detail

/// <v, w>^h = (h/2) sum_j [ (v.w)(q_j^-) + (v.w)(q_{j-1}^+) ].
template <class T>
double lumped_inner(const ElementwiseField<T>& v, const ElementwiseField<T>& w, const Curve& c) {
    const double h = c.h();
    double sum = 0.0;
    for (std::size_t e = 0; e < c.element_count(); ++e)
        sum += detail::dot(v.ends[e][0], w.ends[e][0]) + detail::dot(v.ends[e][1], w.ends[e][1]);
    return 0.5 * h * sum;
}

/// Restriction of a continuous nodal field to element ends.
template <class T>
ElementwiseField<T> from_nodal(const std::vector<T>& nodal, const Curve& c) {
    ElementwiseField<T> f;
    f.ends.resize(c.element_count());
    for (std::size_t e = 0; e < c.element_count(); ++e) {
        auto [a, b] = c.element_nodes(e);
        f.ends[e] = {nodal[a], nodal[b]};
    }
    return f;
}

/// f^{m+1/2}: affine per element, discontinuous across nodes.
struct WeightedNormal {
    std::vector<std::array<Vec2, 2>> ends;

    /// Value at local coordinate s in [0, 1] of element e.
    Vec2 at(std::size_t e, double s) const { return (1.0 - s) * ends[e][0] + s * ends[e][1]; }
};

/// -(1/6) [ (2 r_old + r_new) d_old + (2 r_new + r_old) d_new ]^perp per unit parameter,
/// where d are element chords and r are the local radii; scaled by J to give the rho-derivative form.
inline Vec2 weighted_normal_point(double r_old, double r_new, const Vec2& d_old, const Vec2& d_new,
                                  double J) {
    const Vec2 p = (2.0 * r_old + r_new) * d_old + (2.0 * r_new + r_old) * d_new;
    return -(J / 6.0) * perp(p);
}

inline WeightedNormal weighted_normal(const Curve& old_curve, const Curve& new_curve) {
    if (old_curve.topology != new_curve.topology || old_curve.node_count() != new_curve.node_count())
        throw Error("weighted_normal: curves differ in topology or node count");
    const std::size_t ne = old_curve.element_count();
    const double J = static_cast<double>(ne);
    WeightedNormal f;
    f.ends.resize(ne);
    for (std::size_t e = 0; e < ne; ++e) {
        auto [a, b] = old_curve.element_nodes(e);
        const Vec2 d_old = old_curve.nodes[b] - old_curve.nodes[a];
        const Vec2 d_new = new_curve.nodes[b] - new_curve.nodes[a];
        f.ends[e][0] = weighted_normal_point(old_curve.nodes[a].x(), new_curve.nodes[a].x(), d_old, d_new, J);
        f.ends[e][1] = weighted_normal_point(old_curve.nodes[b].x(), new_curve.nodes[b].x(), d_old, d_new, J);
    }
    return f;
}

/// <(new - old), chi f> with exact (Gauss) integration of the cubic integrand.
/// chi defaults to 1.
inline double weighted_normal_pairing(const Curve& old_curve, const Curve& new_curve,
                                      const WeightedNormal& f, const NodalField* chi = nullptr) {
    const double h = old_curve.h();
    double sum = 0.0;
    for (std::size_t e = 0; e < old_curve.element_count(); ++e) {
        auto [a, b] = old_curve.element_nodes(e);
        const Vec2 da = new_curve.nodes[a] - old_curve.nodes[a];
        const Vec2 db = new_curve.nodes[b] - old_curve.nodes[b];
        for (double s : Gauss2::points) {
            const Vec2 dx = (1.0 - s) * da + s * db;
            const double w = chi ? (1.0 - s) * (*chi)[a] + s * (*chi)[b] : 1.0;
            sum += Gauss2::weight * w * dx.dot(f.at(e, s));
        }
    }
    return h * sum;
}

/// Mass-lumped L2 projection of the element normals onto continuous P1: the
/// length-weighted average of the normals of the elements sharing each node.
inline std::vector<Vec2> vertex_normal(const Curve& c) {
    const auto g = element_geometry(c);
    std::vector<Vec2> acc(c.node_count(), Vec2::Zero());
    std::vector<double> mass(c.node_count(), 0.0);
    for (std::size_t e = 0; e < c.element_count(); ++e) {
        for (std::size_t n : c.element_nodes(e)) {
            acc[n] += g.chord[e] * g.normal[e];
            mass[n] += g.chord[e];
        }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
        if (!(mass[i] > 0.0)) throw DegenerateMesh("zero lumped mass at node " + std::to_string(i));
        acc[i] /= mass[i];
    }
    return acc;
}

/// lambda^{m+1/2}: -kappa_new on axis endpoints, omega.e1 / r elsewhere.
inline NodalField lambda_half(const Curve& c, const NodalField& kappa_new, const BoundarySpec& b) {
    const auto omega = vertex_normal(c);
    NodalField lam(c.node_count());
    for (std::size_t i = 0; i < c.node_count(); ++i) {
        if (on_axis(c, b, i)) {
            lam[i] = -kappa_new[i];
            continue;
        }
        const double r = c.nodes[i].x();
        if (r == 0.0) throw DegenerateMesh("r = 0 at off-axis node " + std::to_string(i));
        lam[i] = omega[i].x() / r;
    }
    return lam;
}

} // namespace axiflow
