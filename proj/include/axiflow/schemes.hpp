#pragma once

// Residual and Jacobian assembly for the fully discrete, volume-preserving schemes
// (surface diffusion, intermediate flow, conserved mean curvature flow), each in a
// stabilized and an equidistributing variant, including contact-energy boundary terms.
//
// Inner products that pair f^{m+1/2} with test functions, and the weighted mass terms,
// are integrated exactly with a two-point Gauss rule per element (all integrands are at
// most cubic in the element coordinate). Only the equidistributing curvature equation and
// the vertex normal use mass lumping.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseQR>

#include "geometry.hpp"
#include "linsolve.hpp"
#include "quadrature.hpp"

namespace axiflow {

enum class FlowKind { SurfaceDiffusion, Intermediate, ConservedMeanCurvature };
enum class SchemeVariant { Stabilized, Equidistributing };

struct FlowSpec {
    FlowKind kind = FlowKind::SurfaceDiffusion;
    SchemeVariant variant = SchemeVariant::Stabilized;
    double alpha = 1.0;  ///< attachment kinetics (intermediate flow only)
    double xi = 1.0;     ///< surface diffusion weight (intermediate flow only)

    bool has_potential() const { return kind == FlowKind::Intermediate; }
    bool equidistributing() const { return variant == SchemeVariant::Equidistributing; }

    void validate() const {
        if (kind == FlowKind::Intermediate && !(alpha > 0.0 && xi > 0.0))
            throw Error("intermediate flow needs alpha > 0 and xi > 0");
    }
};

inline const char* to_string(FlowKind k) {
    switch (k) {
    case FlowKind::SurfaceDiffusion: return "sd";
    case FlowKind::Intermediate: return "intermediate";
    case FlowKind::ConservedMeanCurvature: return "cmcf";
    }
    return "?";
}

inline const char* to_string(SchemeVariant v) {
    return v == SchemeVariant::Stabilized ? "stabilized" : "equidistributing";
}

/// Curve plus nodal fields at one time level. `curvature` holds the surface mean
/// curvature for stabilized schemes and the curve curvature for equidistributing ones;
/// `potential` is the intermediate flow's second field (empty otherwise).
struct StepState {
    Curve curve;
    NodalField curvature;
    NodalField potential;
};

/// Global unknown numbering, node by node. Constrained position components are
/// eliminated. Closed curves put the last node's unknowns in the dense border.
class DofMap {
public:
    static constexpr int kNone = -1;

    DofMap(const Curve& c, const BoundarySpec& b, bool with_potential) : idx_(c.node_count()) {
        int next = 0;
        for (std::size_t i = 0; i < c.node_count(); ++i) {
            bool fix_r = false, fix_z = false;
            if (auto ep = endpoint_at(c, b, i)) {
                switch (ep->kind) {
                case EndpointClass::Axis:
                case EndpointClass::CylinderWall: fix_r = true; break;
                case EndpointClass::Plane: fix_z = true; break;
                case EndpointClass::Fixed: fix_r = fix_z = true; break;
                }
            }
            idx_[i][0] = fix_r ? kNone : next++;
            idx_[i][1] = fix_z ? kNone : next++;
            idx_[i][2] = next++;
            idx_[i][3] = with_potential ? next++ : kNone;
        }
        n_ = static_cast<std::size_t>(next);
        if (c.closed()) {
            const auto& last = idx_.back();
            border_ = static_cast<std::size_t>(std::count_if(last.begin(), last.end(), [](int v) { return v >= 0; }));
        }
        const std::size_t interior = n_ - border_;
        for (std::size_t e = 0; e < c.element_count(); ++e) {
            auto [a, bn] = c.element_nodes(e);
            for (int u : idx_[a])
                for (int v : idx_[bn]) {
                    if (u < 0 || v < 0) continue;
                    if (static_cast<std::size_t>(u) >= interior || static_cast<std::size_t>(v) >= interior) continue;
                    const std::size_t lo = static_cast<std::size_t>(std::min(u, v));
                    const std::size_t hi = static_cast<std::size_t>(std::max(u, v));
                    bandwidth_ = std::max(bandwidth_, hi - lo);
                }
            for (std::size_t n : {a, bn})
                for (int u : idx_[n])
                    for (int v : idx_[n])
                        if (u >= 0 && v >= 0 && static_cast<std::size_t>(std::max(u, v)) < interior)
                            bandwidth_ = std::max(bandwidth_, static_cast<std::size_t>(std::abs(u - v)));
        }
    }

    int position(std::size_t node, int comp) const { return idx_[node][static_cast<std::size_t>(comp)]; }
    int curvature(std::size_t node) const { return idx_[node][2]; }
    int potential(std::size_t node) const { return idx_[node][3]; }
    std::size_t size() const { return n_; }
    std::size_t bandwidth() const { return bandwidth_; }
    std::size_t border() const { return border_; }
    std::size_t node_count() const { return idx_.size(); }

    BandedMatrix make_matrix() const { return BandedMatrix(n_, bandwidth_, bandwidth_, border_); }

private:
    std::vector<std::array<int, 4>> idx_;
    std::size_t n_ = 0;
    std::size_t bandwidth_ = 0;
    std::size_t border_ = 0;
};

struct SchemeSystem {
    Vector residual;
    BandedMatrix jacobian;
};

/// Assembles the nonlinear system for one time step from level m to m+1.
class SchemeAssembler {
public:
    SchemeAssembler(FlowSpec flow, BoundarySpec bspec, StepState old_state, double dt)
        : flow_(flow), bspec_(std::move(bspec)), old_(std::move(old_state)), dt_(dt),
          dofs_(old_.curve, bspec_, flow_.has_potential()) {
        flow_.validate();
        if (!(dt_ > 0.0)) throw Error("time step must be positive");
        prepare_old_level();
    }

    const DofMap& dofs() const { return dofs_; }
    const StepState& old_state() const { return old_; }
    const FlowSpec& flow() const { return flow_; }
    const BoundarySpec& boundary() const { return bspec_; }
    double dt() const { return dt_; }

    Vector residual(const StepState& trial) const { return evaluate(trial, nullptr); }

    SchemeSystem assemble(const StepState& trial) const {
        BandedMatrix jac = dofs_.make_matrix();
        Vector res = evaluate(trial, &jac);
        return {std::move(res), std::move(jac)};
    }

    /// Adds an unknown-vector increment to a state.
    StepState apply_increment(const StepState& s, const Vector& delta) const {
        StepState out = s;
        for (std::size_t i = 0; i < dofs_.node_count(); ++i) {
            for (int c = 0; c < 2; ++c)
                if (int d = dofs_.position(i, c); d >= 0) out.curve.nodes[i][c] += delta[d];
            out.curvature[i] += delta[dofs_.curvature(i)];
            if (int d = dofs_.potential(i); d >= 0) out.potential[i] += delta[d];
        }
        return out;
    }

    /// Effective surface mean curvature at each node of a trial state:
    /// the unknown itself for stabilized schemes, kappa - lambda(kappa) otherwise.
    NodalField effective_curvature(const StepState& s) const {
        NodalField out(s.curvature.size());
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (!flow_.equidistributing()) out[k] = s.curvature[k];
            else if (axis_[k]) out[k] = 2.0 * s.curvature[k];
            else out[k] = s.curvature[k] - lambda_[k];
        }
        return out;
    }

private:
    struct OldElement {
        std::size_t a = 0, b = 0;
        Vec2 d;            // chord X_b - X_a
        double len = 0.0;  // |d|
        double ra = 0.0, rb = 0.0;
        double stiff = 0.0;  // mean r / |d|
        Vec2 normal;
    };

    void prepare_old_level() {
        const Curve& c = old_.curve;
        validate(c, bspec_);
        const auto geo = element_geometry(c);
        elems_.resize(c.element_count());
        for (std::size_t e = 0; e < c.element_count(); ++e) {
            auto [a, b] = c.element_nodes(e);
            OldElement& o = elems_[e];
            o.a = a;
            o.b = b;
            o.d = c.nodes[b] - c.nodes[a];
            o.len = geo.chord[e];
            o.ra = c.nodes[a].x();
            o.rb = c.nodes[b].x();
            o.stiff = 0.5 * (o.ra + o.rb) / o.len;
            o.normal = geo.normal[e];
        }
        axis_.assign(c.node_count(), false);
        for (std::size_t i = 0; i < c.node_count(); ++i) axis_[i] = on_axis(c, bspec_, i);
        if (flow_.equidistributing()) {
            NodalField zero(c.node_count(), 0.0);
            lambda_ = lambda_half(c, zero, bspec_);
        }
        if (flow_.kind == FlowKind::ConservedMeanCurvature) {
            // a_k = <X^m.e1, phi_k |X^m_rho|>, total = <X^m.e1, |X^m_rho|>
            weights_.assign(c.node_count(), 0.0);
            for (const auto& o : elems_) {
                weights_[o.a] += o.len * (2.0 * o.ra + o.rb) / 6.0;
                weights_[o.b] += o.len * (o.ra + 2.0 * o.rb) / 6.0;
            }
            weights_total_ = 0.0;
            for (double w : weights_) weights_total_ += w;
        }
        if (old_.curvature.size() != c.node_count()) throw Error("old state curvature has wrong length");
        if (flow_.has_potential() && old_.potential.size() != c.node_count())
            throw Error("old state potential has wrong length");
    }

    Vector evaluate(const StepState& s, BandedMatrix* jac) const {
        const Curve& X = s.curve;
        const Curve& Xm = old_.curve;
        if (X.node_count() != Xm.node_count() || X.topology != Xm.topology)
            throw Error("trial curve does not match the old level");
        const std::size_t nn = X.node_count();
        const bool equi = flow_.equidistributing();
        const FlowKind kind = flow_.kind;
        const double inv_dt = 1.0 / dt_;
        const double inv_alpha = 1.0 / flow_.alpha;
        const double inv_xi = 1.0 / flow_.xi;

        Vector R = Vector::Zero(static_cast<Eigen::Index>(dofs_.size()));
        auto addR = [&](int row, double v) {
            if (row >= 0) R[row] += v;
        };
        auto addJ = [&](int row, int col, double v) {
            if (jac && row >= 0 && col >= 0) jac->add(static_cast<std::size_t>(row), static_cast<std::size_t>(col), v);
        };

        const NodalField ke = effective_curvature(s);
        NodalField fac(nn, 1.0);
        if (equi)
            for (std::size_t k = 0; k < nn; ++k)
                if (axis_[k]) fac[k] = 2.0;

        const std::array<double, 2> sgn{-1.0, 1.0};
        const double floor_len = kDegenerateRelLength * bounding_diagonal(X);

        for (const OldElement& o : elems_) {
            const std::array<std::size_t, 2> nd{o.a, o.b};
            const Vec2& Xa = X.nodes[o.a];
            const Vec2& Xb = X.nodes[o.b];
            const Vec2 dn = Xb - Xa;
            const double Ln = dn.norm();
            if (!(Ln > floor_len)) throw DegenerateMesh("trial element collapsed");
            const Vec2 da = Xa - Xm.nodes[o.a];
            const Vec2 db = Xb - Xm.nodes[o.b];

            std::array<std::array<int, 2>, 2> pos{};
            std::array<int, 2> cur{}, pot{};
            for (int l = 0; l < 2; ++l) {
                for (int c = 0; c < 2; ++c) pos[l][c] = dofs_.position(nd[l], c);
                cur[l] = dofs_.curvature(nd[l]);
                pot[l] = dofs_.potential(nd[l]);
            }

            for (double xq : Gauss2::points) {
                const double wq = Gauss2::weight;
                const std::array<double, 2> phi{1.0 - xq, xq};
                const double rm = phi[0] * o.ra + phi[1] * o.rb;
                const double rn = phi[0] * Xa.x() + phi[1] * Xb.x();
                const Vec2 P = (2.0 * rm + rn) * o.d + (2.0 * rn + rm) * dn;
                const Vec2 g = -perp(P) / 6.0;  // f^{m+1/2} per unit of h^{-1}
                // derivative of g w.r.t. new position component (l, c)
                auto dg = [&](int l, int c) -> Vec2 {
                    Vec2 dP = (2.0 * rn + rm) * sgn[l] * Vec2::Unit(c);
                    if (c == 0) dP += phi[l] * (o.d + 2.0 * dn);
                    return -perp(dP) / 6.0;
                };
                const Vec2 dx = phi[0] * da + phi[1] * db;

                // (1/dt) <X^{m+1} - X^m, chi f^{m+1/2}>
                for (int k = 0; k < 2; ++k) {
                    addR(cur[k], wq * inv_dt * phi[k] * dx.dot(g));
                    if (!jac) continue;
                    for (int l = 0; l < 2; ++l)
                        for (int c = 0; c < 2; ++c)
                            addJ(cur[k], pos[l][c], wq * inv_dt * phi[k] * (phi[l] * g[c] + dx.dot(dg(l, c))));
                }

                const double kap = phi[0] * ke[o.a] + phi[1] * ke[o.b];

                // <kappa f^{m+1/2}, eta>
                if (!equi) {
                    for (int k = 0; k < 2; ++k)
                        for (int c = 0; c < 2; ++c) {
                            addR(pos[k][c], wq * kap * phi[k] * g[c]);
                            if (!jac) continue;
                            for (int l = 0; l < 2; ++l) {
                                addJ(pos[k][c], cur[l], wq * phi[l] * phi[k] * g[c]);
                                for (int c2 = 0; c2 < 2; ++c2)
                                    addJ(pos[k][c], pos[l][c2], wq * kap * phi[k] * dg(l, c2)[c]);
                            }
                        }
                }

                if (kind == FlowKind::Intermediate) {
                    const double y = phi[0] * s.potential[o.a] + phi[1] * s.potential[o.b];
                    for (int k = 0; k < 2; ++k) {
                        addR(pot[k], o.len * wq * rm * (inv_alpha * y - kap) * phi[k]);
                        for (int l = 0; l < 2; ++l) {
                            addJ(pot[k], pot[l], o.len * wq * rm * inv_alpha * phi[l] * phi[k]);
                            addJ(pot[k], cur[l], -o.len * wq * rm * fac[nd[l]] * phi[l] * phi[k]);
                        }
                    }
                } else if (kind == FlowKind::ConservedMeanCurvature) {
                    for (int k = 0; k < 2; ++k) {
                        addR(cur[k], -o.len * wq * rm * kap * phi[k]);
                        for (int l = 0; l < 2; ++l)
                            addJ(cur[k], cur[l], -o.len * wq * rm * fac[nd[l]] * phi[l] * phi[k]);
                    }
                }
            }

            // diffusion terms <X^m.e1 u_rho, chi_rho |X^m_rho|^{-1}>
            if (kind == FlowKind::SurfaceDiffusion) {
                const double du = ke[o.b] - ke[o.a];
                for (int k = 0; k < 2; ++k) {
                    addR(cur[k], -o.stiff * du * sgn[k]);
                    for (int l = 0; l < 2; ++l) addJ(cur[k], cur[l], -o.stiff * sgn[k] * sgn[l] * fac[nd[l]]);
                }
            } else if (kind == FlowKind::Intermediate) {
                const double dy = s.potential[o.b] - s.potential[o.a];
                for (int k = 0; k < 2; ++k) {
                    addR(cur[k], -o.stiff * dy * sgn[k]);
                    addR(pot[k], inv_xi * o.stiff * dy * sgn[k]);
                    for (int l = 0; l < 2; ++l) {
                        addJ(cur[k], pot[l], -o.stiff * sgn[k] * sgn[l]);
                        addJ(pot[k], pot[l], inv_xi * o.stiff * sgn[k] * sgn[l]);
                    }
                }
            }

            // geometric part of the curvature equation
            if (!equi) {
                // <eta.e1, |X^{m+1}_rho|> + <X^m.e1 X^{m+1}_rho, eta_rho |X^m_rho|^{-1}>
                for (int k = 0; k < 2; ++k) {
                    addR(pos[k][0], 0.5 * Ln);
                    for (int l = 0; l < 2; ++l)
                        for (int c = 0; c < 2; ++c) addJ(pos[k][0], pos[l][c], 0.5 * sgn[l] * dn[c] / Ln);
                    for (int c = 0; c < 2; ++c) {
                        addR(pos[k][c], o.stiff * dn[c] * sgn[k]);
                        for (int l = 0; l < 2; ++l) addJ(pos[k][c], pos[l][c], o.stiff * sgn[k] * sgn[l]);
                    }
                }
            } else {
                // <kappa nu^m, eta |X^m_rho|>^h + <X^{m+1}_rho, eta_rho |X^m_rho|^{-1}>
                for (int k = 0; k < 2; ++k)
                    for (int c = 0; c < 2; ++c) {
                        addR(pos[k][c], 0.5 * o.len * o.normal[c] * s.curvature[nd[k]]);
                        addJ(pos[k][c], cur[k], 0.5 * o.len * o.normal[c]);
                        addR(pos[k][c], dn[c] * sgn[k] / o.len);
                        for (int l = 0; l < 2; ++l) addJ(pos[k][c], pos[l][c], sgn[k] * sgn[l] / o.len);
                    }
            }
        }

        add_contact_terms(X, R, jac);

        if (kind == FlowKind::ConservedMeanCurvature) {
            // + (<X^m.e1, kappa |X^m_rho|> / <X^m.e1, |X^m_rho|>) <X^m.e1, chi |X^m_rho|>
            double avg = 0.0;
            for (std::size_t k = 0; k < nn; ++k) avg += weights_[k] * ke[k];
            avg /= weights_total_;
            for (std::size_t k = 0; k < nn; ++k) addR(dofs_.curvature(k), weights_[k] * avg);
            if (jac) {
                Vector u = Vector::Zero(static_cast<Eigen::Index>(dofs_.size()));
                Vector v = Vector::Zero(static_cast<Eigen::Index>(dofs_.size()));
                for (std::size_t k = 0; k < nn; ++k) {
                    u[dofs_.curvature(k)] = weights_[k] / weights_total_;
                    v[dofs_.curvature(k)] = weights_[k] * fac[k];
                }
                jac->set_rank_one(std::move(u), std::move(v));
            }
        }
        return R;
    }

    /// Residual contributions of the contact energies (the negated right-hand-side terms).
    void add_contact_terms(const Curve& X, Vector& R, BandedMatrix* jac) const {
        if (bspec_.empty()) return;
        for (int p = 0; p < 2; ++p) {
            const Endpoint& ep = bspec_.end(p);
            if (ep.rho == 0.0) continue;
            const std::size_t node = endpoint_node(X, p);
            const double r_old = old_.curve.nodes[node].x();
            const double r_new = X.nodes[node].x();
            if (ep.kind == EndpointClass::CylinderWall) {
                const int row = dofs_.position(node, 1);
                if (row >= 0) R[row] += flow_.equidistributing() ? ep.rho : ep.rho * r_old;
            } else if (ep.kind == EndpointClass::Plane) {
                const int row = dofs_.position(node, 0);
                if (row < 0) continue;
                if (flow_.equidistributing()) {
                    R[row] += ep.rho;
                } else {
                    const double plus = std::max(ep.rho, 0.0), minus = std::min(ep.rho, 0.0);
                    R[row] += plus * r_new + minus * r_old;
                    if (jac && plus != 0.0) jac->add(static_cast<std::size_t>(row), static_cast<std::size_t>(row), plus);
                }
            } else {
                throw Error("contact energy given for an axis or fixed endpoint");
            }
        }
    }

    FlowSpec flow_;
    BoundarySpec bspec_;
    StepState old_;
    double dt_;
    DofMap dofs_;
    std::vector<OldElement> elems_;
    std::vector<bool> axis_;
    NodalField lambda_;
    NodalField weights_;
    double weights_total_ = 1.0;
};

/// Nodal curvature consistent with a curve at rest: least-squares solution of the
/// curvature equation with X^{m+1} = X^m. Used to seed the first time step.
inline StepState initial_state(const Curve& curve, const BoundarySpec& bspec, const FlowSpec& flow) {
    StepState s{curve, NodalField(curve.node_count(), 0.0), {}};
    if (flow.has_potential()) s.potential.assign(curve.node_count(), 0.0);
    const SchemeAssembler probe(flow, bspec, s, 1.0);
    const SchemeSystem sys = probe.assemble(s);  // position rows are affine in the curvature
    const DofMap& dm = probe.dofs();
    const std::size_t nn = curve.node_count();

    std::vector<int> rows;
    for (std::size_t k = 0; k < nn; ++k)
        for (int c = 0; c < 2; ++c)
            if (int r = dm.position(k, c); r >= 0) rows.push_back(r);

    std::vector<Eigen::Triplet<double>> trip;
    std::vector<bool> seen(nn, false);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t l = 0; l < nn; ++l) {
            const double v = sys.jacobian.coeff(static_cast<std::size_t>(rows[i]), static_cast<std::size_t>(dm.curvature(l)));
            if (v == 0.0) continue;
            trip.emplace_back(static_cast<int>(i), static_cast<int>(l), v);
            seen[l] = true;
        }
    }
    // nodes that do not enter the equations are solved for on a reduced set of columns
    std::vector<int> col(nn, -1);
    int ncols = 0;
    for (std::size_t l = 0; l < nn; ++l)
        if (seen[l]) col[l] = ncols++;
    for (auto& t : trip) t = Eigen::Triplet<double>(t.row(), col[static_cast<std::size_t>(t.col())], t.value());

    Eigen::SparseMatrix<double> G(static_cast<Eigen::Index>(rows.size()), ncols);
    G.setFromTriplets(trip.begin(), trip.end());
    G.makeCompressed();
    Vector rhs(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) rhs[static_cast<Eigen::Index>(i)] = -sys.residual[rows[i]];
    Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr(G);
    if (qr.info() != Eigen::Success) throw SingularSystem("initial curvature fit failed");
    const Vector kap = qr.solve(rhs);

    for (std::size_t l = 0; l < nn; ++l)
        if (col[l] >= 0) s.curvature[l] = kap[col[l]];
    // The fit is weighted by r and says little about axis nodes; those and nodes
    // absent from the equations take their neighbour's value.
    for (std::size_t l = 0; l < nn; ++l)
        if (col[l] < 0 || on_axis(curve, bspec, l)) s.curvature[l] = s.curvature[l == 0 ? 1 : l - 1];

    if (flow.has_potential()) {
        const NodalField ke = probe.effective_curvature(s);
        for (std::size_t k = 0; k < ke.size(); ++k) s.potential[k] = flow.alpha * ke[k];
    }
    return s;
}

} // namespace axiflow
