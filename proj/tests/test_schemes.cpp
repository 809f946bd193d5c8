#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "axiflow/axiflow.hpp"

using namespace axiflow;

namespace {

constexpr double pi = std::numbers::pi;

const FlowKind kKinds[] = {FlowKind::SurfaceDiffusion, FlowKind::Intermediate, FlowKind::ConservedMeanCurvature};
const SchemeVariant kVariants[] = {SchemeVariant::Stabilized, SchemeVariant::Equidistributing};

struct Setup {
    std::string name;
    Curve curve;
    BoundarySpec bspec;
};

// One geometry per endpoint class combination, including contact energies of both signs.
std::vector<Setup> setups() {
    std::vector<Setup> out;
    {
        auto [c, b] = generate({shape::RoundedCylinder{1, 3}, 32});
        out.push_back({"capsule", c, b});
    }
    {
        auto [c, b] = generate({shape::Torus{1, 0.3}, 24});
        out.push_back({"torus", c, b});
    }
    {
        auto [c, b] = generate({shape::HalfDiscDroplet{2, 1, 0.9}, 24});
        out.push_back({"droplet+", c, b});
    }
    {
        auto [c, b] = generate({shape::HalfDiscDroplet{2, 1, -0.5}, 24});
        out.push_back({"droplet-", c, b});
    }
    {
        // meniscus from the top plane down to a wall at r = 1.5, with a fixed end on the axis side
        Curve c;
        for (int j = 0; j <= 20; ++j) {
            const double s = j / 20.0;
            c.nodes.emplace_back(0.5 + s, 2.0 - std::sin(0.5 * pi * s));
        }
        out.push_back({"wall", c,
                       BoundarySpec::open({EndpointClass::Fixed, 0}, {EndpointClass::CylinderWall, -0.7})});
        out.push_back({"wall+plane", c,
                       BoundarySpec::open({EndpointClass::Plane, 0.4}, {EndpointClass::CylinderWall, 0.6})});
    }
    return out;
}

StepState perturbed(const StepState& s, std::mt19937& rng, double amp) {
    std::normal_distribution<double> nd;
    StepState t = s;
    for (auto& x : t.curvature) x += 10 * amp * nd(rng);
    for (auto& x : t.potential) x += 10 * amp * nd(rng);
    return t;
}

// Moves every unconstrained position component.
StepState moved(const SchemeAssembler& as, const StepState& s, std::mt19937& rng, double amp) {
    std::normal_distribution<double> nd;
    Vector d = Vector::Zero(static_cast<Eigen::Index>(as.dofs().size()));
    for (std::size_t i = 0; i < as.dofs().node_count(); ++i)
        for (int c = 0; c < 2; ++c)
            if (int k = as.dofs().position(i, c); k >= 0) d[k] = amp * nd(rng);
    return as.apply_increment(s, d);
}

Vector random_direction(std::size_t n, std::mt19937& rng) {
    std::normal_distribution<double> nd;
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = nd(rng);
    return v;
}

double curvature_row_sum(const SchemeAssembler& as, const Vector& R) {
    double s = 0.0;
    for (std::size_t i = 0; i < as.dofs().node_count(); ++i) s += R[as.dofs().curvature(i)];
    return s;
}

} // namespace

TEST(DofMap, UnknownCounts) {
    for (const auto& st : setups()) {
        const std::size_t nn = st.curve.node_count();
        std::size_t constraints = 0;
        if (!st.bspec.empty())
            for (int p = 0; p < 2; ++p) constraints += st.bspec.end(p).kind == EndpointClass::Fixed ? 2 : 1;
        for (bool pot : {false, true}) {
            const DofMap dm(st.curve, st.bspec, pot);
            EXPECT_EQ(dm.size(), 2 * nn - constraints + nn * (pot ? 2 : 1)) << st.name;
        }
    }
}

TEST(DofMap, ConstrainedComponentsEliminated) {
    auto [c, b] = generate({shape::HalfDiscDroplet{2, 1, 0.0}, 16});
    const DofMap dm(c, b, false);
    EXPECT_EQ(dm.position(0, 0), DofMap::kNone);   // axis: r fixed
    EXPECT_GE(dm.position(0, 1), 0);
    EXPECT_GE(dm.position(16, 0), 0);              // plane: z fixed
    EXPECT_EQ(dm.position(16, 1), DofMap::kNone);
    EXPECT_EQ(dm.potential(5), DofMap::kNone);
    EXPECT_EQ(dm.border(), 0u);
    EXPECT_LE(dm.bandwidth(), 5u);

    auto [t, tb] = generate({shape::Torus{1, 0.25}, 16});
    const DofMap tm(t, tb, true);
    EXPECT_EQ(tm.border(), 4u);  // last node's unknowns close the loop
}

TEST(Residual, ChiOneRowSumIsVolumeChange) {
    std::mt19937 rng(17);
    for (const auto& st : setups())
        for (auto kind : kKinds)
            for (auto var : kVariants) {
                const FlowSpec fs{kind, var, 1.3, 2.0};
                const StepState s0 = initial_state(st.curve, st.bspec, fs);
                const double dt = 1e-3;
                const SchemeAssembler as(fs, st.bspec, s0, dt);
                for (int trial = 0; trial < 3; ++trial) {
                    const StepState t = perturbed(moved(as, s0, rng, 0.01), rng, 0.01);
                    const double dM = discrete_volume(t.curve, st.bspec) - discrete_volume(s0.curve, st.bspec);
                    const double sum = curvature_row_sum(as, as.residual(t));
                    const double scale = std::abs(discrete_volume(s0.curve, st.bspec)) / (2 * pi * dt);
                    EXPECT_NEAR(sum, dM / (2 * pi * dt), 1e-12 * scale)
                        << st.name << ' ' << to_string(kind) << ' ' << to_string(var);
                }
            }
}

TEST(Residual, FirstVariationOfArea) {
    // trial = old, kappa = 0: the position rows are dA/dX / (2 pi)
    auto [c, b] = generate({shape::RoundedCylinder{1, 7}, 40});
    const FlowSpec fs{FlowKind::SurfaceDiffusion, SchemeVariant::Stabilized};
    StepState s{c, NodalField(c.node_count(), 0.0), {}};
    const SchemeAssembler as(fs, b, s, 1e-3);
    const Vector R = as.residual(s);
    double biggest = 0.0;
    for (std::size_t i = 0; i < c.node_count(); ++i)
        for (int k = 0; k < 2; ++k) {
            const int row = as.dofs().position(i, k);
            if (row < 0) continue;
            const double eps = 1e-6;
            Curve p = c, m = c;
            p.nodes[i][k] += eps;
            m.nodes[i][k] -= eps;
            const double fd = (surface_area(p) - surface_area(m)) / (2 * eps) / (2 * pi);
            EXPECT_NEAR(R[row], fd, 1e-7) << i << ',' << k;
            biggest = std::max(biggest, std::abs(R[row]));
        }
    EXPECT_GT(biggest, 0.1);
}

TEST(Residual, EquidistributionRowsVanishOnUniformLine) {
    Curve c;
    for (int j = 0; j <= 12; ++j) c.nodes.emplace_back(1.0, 3.0 - 0.25 * j);
    const auto b = BoundarySpec::open({EndpointClass::Plane, 0}, {EndpointClass::Plane, 0});
    const FlowSpec fs{FlowKind::SurfaceDiffusion, SchemeVariant::Equidistributing};
    const StepState s{c, NodalField(13, 0.0), {}};
    const SchemeAssembler as(fs, b, s, 1e-3);
    const Vector R = as.residual(s);
    for (std::size_t i = 0; i < 13; ++i)
        for (int k = 0; k < 2; ++k)
            if (int row = as.dofs().position(i, k); row >= 0) {
                EXPECT_NEAR(R[row], 0.0, 1e-13);
            }
}

TEST(Residual, CircleCurvatureSign) {
    // generating-curve curvature of a circle of radius R with outer normal is -1/R
    const double R = 0.5;
    std::vector<double> err;
    for (std::size_t J : {32u, 64u}) {
        auto [c, b] = generate({shape::Torus{2.0, R}, J});
        const auto s = initial_state(c, b, {FlowKind::SurfaceDiffusion, SchemeVariant::Equidistributing});
        double e = 0.0;
        for (double k : s.curvature) e = std::max(e, std::abs(k + 1.0 / R));
        err.push_back(e);
    }
    EXPECT_LT(err[1], 5e-3);
    EXPECT_GT(err[0] / err[1], 3.5);
}

TEST(Residual, SphereEffectiveCurvature) {
    // kappa - lambda on the equidistributing unknowns approximates the mean curvature -2
    auto [c, b] = generate({shape::Sphere{1.0}, 128});
    const FlowSpec fs{FlowKind::SurfaceDiffusion, SchemeVariant::Equidistributing};
    const auto s = initial_state(c, b, fs);
    const SchemeAssembler as(fs, b, s, 1e-3);
    const auto ke = as.effective_curvature(s);
    for (std::size_t i = 1; i + 1 < ke.size(); ++i) EXPECT_NEAR(ke[i], -2.0, 2e-3) << i;
    EXPECT_NEAR(ke.front(), -2.0, 2e-2);
    EXPECT_NEAR(ke.back(), -2.0, 2e-2);

    // the stabilized seed is a fit weighted by r and is loosest next to the poles
    const FlowSpec st{FlowKind::SurfaceDiffusion, SchemeVariant::Stabilized};
    const auto ss = initial_state(c, b, st);
    for (std::size_t i = 0; i < ss.curvature.size(); ++i) {
        const bool near_pole = i < 8 || i + 8 >= ss.curvature.size();
        EXPECT_NEAR(ss.curvature[i], -2.0, near_pole ? 0.2 : 2e-3) << i;
    }
}

TEST(Residual, IntermediatePotentialRowsVanish) {
    auto [c, b] = generate({shape::RoundedCylinder{1, 4}, 30});
    const FlowSpec fs{FlowKind::Intermediate, SchemeVariant::Stabilized, 1.7, 3.0};
    const StepState s{c, NodalField(c.node_count(), -0.8), NodalField(c.node_count(), 1.7 * -0.8)};
    const SchemeAssembler as(fs, b, s, 1e-3);
    const Vector R = as.residual(s);
    for (std::size_t i = 0; i < c.node_count(); ++i) EXPECT_NEAR(R[as.dofs().potential(i)], 0.0, 1e-14);
}

TEST(Residual, CmcfConstantCurvatureCancels) {
    for (auto [c, b] : {generate({shape::RoundedCylinder{1, 4}, 30}), generate({shape::Torus{1, 0.4}, 30})}) {
        const FlowSpec fs{FlowKind::ConservedMeanCurvature, SchemeVariant::Stabilized};
        const StepState s{c, NodalField(c.node_count(), 1.3), {}};
        const SchemeAssembler as(fs, b, s, 1e-3);
        const Vector R = as.residual(s);
        for (std::size_t i = 0; i < c.node_count(); ++i) EXPECT_NEAR(R[as.dofs().curvature(i)], 0.0, 1e-14);
    }
}

TEST(Residual, IntermediateLargeXiApproachesSurfaceDiffusion) {
    auto [c, b] = generate({shape::RoundedCylinder{1, 8}, 64});
    const FlowSpec sd{FlowKind::SurfaceDiffusion, SchemeVariant::Stabilized};
    const FlowSpec im{FlowKind::Intermediate, SchemeVariant::Stabilized, 1.0, 1e6};
    const auto a = solve_timestep(sd, b, initial_state(c, b, sd), 1e-3);
    const auto m = solve_timestep(im, b, initial_state(c, b, im), 1e-3);
    double diff = 0.0;
    for (std::size_t i = 0; i < c.node_count(); ++i)
        diff = std::max(diff, (a.state.curve.nodes[i] - m.state.curve.nodes[i]).lpNorm<Eigen::Infinity>());
    EXPECT_LE(diff, 1e-4);
}

TEST(Residual, CmcfSphereNearlyStationary) {
    const std::size_t J = 128;
    auto [c, b] = generate({shape::Sphere{1.0}, J});
    for (auto var : kVariants) {
        const FlowSpec fs{FlowKind::ConservedMeanCurvature, var};
        const auto r = solve_timestep(fs, b, initial_state(c, b, fs), 1e-3);
        double move = 0.0;
        for (std::size_t i = 0; i < c.node_count(); ++i) move = std::max(move, (r.state.curve.nodes[i] - c.nodes[i]).norm());
        const double h = 1.0 / J;
        EXPECT_LE(move, 10 * h * h) << to_string(var);
    }
}

TEST(Residual, IntermediateDissipation) {
    auto [c, b] = generate({shape::RoundedCylinder{1, 7}, 64});
    const FlowSpec fs{FlowKind::Intermediate, SchemeVariant::Stabilized, 1.5, 2.0};
    StepState s = initial_state(c, b, fs);
    const double dt = 1e-3;
    for (int step = 0; step < 5; ++step) {
        const auto r = solve_timestep(fs, b, s, dt);
        const auto& Xm = s.curve;
        const auto& n = r.state;
        double d1 = 0.0, d2 = 0.0;
        for (std::size_t e = 0; e < Xm.element_count(); ++e) {
            const double ra = Xm.nodes[e].x(), rb = Xm.nodes[e + 1].x();
            const double L = (Xm.nodes[e + 1] - Xm.nodes[e]).norm();
            const double dy = n.potential[e + 1] - n.potential[e];
            d1 += 0.5 * (ra + rb) * dy * dy / L;
            for (double q : Gauss2::points) {
                const double r = (1 - q) * ra + q * rb;
                const double k = (1 - q) * n.curvature[e] + q * n.curvature[e + 1];
                const double y = (1 - q) * n.potential[e] + q * n.potential[e + 1];
                d2 += 0.5 * L * r * (k - y / fs.alpha) * (k - y / fs.alpha);
            }
        }
        const double dissipation = d1 / fs.alpha + fs.xi * d2;
        const double drop = (surface_area(Xm) - surface_area(n.curve)) / (2 * pi * dt);
        EXPECT_GE(dissipation, 0.0);
        EXPECT_LE(dissipation, drop + 1e-9 * std::abs(drop)) << step;
        s = r.state;
    }
}

TEST(ContactTerms, NeutralContributesNothing) {
    auto [c, b0] = generate({shape::HalfDiscDroplet{2, 1, 0.0}, 16});
    const FlowSpec fs{FlowKind::SurfaceDiffusion, SchemeVariant::Stabilized};
    const auto s = initial_state(c, b0, fs);
    const SchemeAssembler a0(fs, b0, s, 1e-3);
    std::mt19937 rng(2);
    const auto t = moved(a0, s, rng, 0.01);
    const auto b1 = BoundarySpec::open(b0.end(0), {EndpointClass::Plane, -0.0});
    const SchemeAssembler a1(fs, b1, s, 1e-3);
    EXPECT_EQ(a0.residual(t), a1.residual(t));
}

TEST(ContactTerms, SignSplit) {
    auto [c, b0] = generate({shape::HalfDiscDroplet{2, 1, 0.0}, 16});
    const std::size_t end = c.node_count() - 1;
    for (auto var : kVariants) {
        const FlowSpec fs{FlowKind::SurfaceDiffusion, var};
        const StepState s{c, NodalField(c.node_count(), 0.0), {}};
        StepState t = s;
        t.curve.nodes[end].x() += 0.125;
        const double r_old = c.nodes[end].x(), r_new = t.curve.nodes[end].x();
        const Vector base = SchemeAssembler(fs, b0, s, 1e-3).residual(t);
        for (double rho : {0.9, -0.5}) {
            const auto b = BoundarySpec::open(b0.end(0), {EndpointClass::Plane, rho});
            const SchemeAssembler as(fs, b, s, 1e-3);
            const int row = as.dofs().position(end, 0);
            const double got = as.residual(t)[row] - base[row];
            double want = rho;
            if (var == SchemeVariant::Stabilized) want = rho > 0 ? rho * r_new : rho * r_old;
            EXPECT_NEAR(got, want, 1e-14) << rho << ' ' << to_string(var);
        }
    }
}

TEST(ContactTerms, AxisOrFixedEndpointRejected) {
    auto [c, b0] = generate({shape::Sphere{1.0}, 16});
    const FlowSpec fs{};
    const StepState s{c, NodalField(c.node_count(), 0.0), {}};
    const auto bad = BoundarySpec::open({EndpointClass::Axis, 0.5}, b0.end(1));
    EXPECT_THROW(SchemeAssembler(fs, bad, s, 1e-3), Error);
}

TEST(Assembler, RejectsBadParameters) {
    auto [c, b] = generate({shape::Sphere{1.0}, 16});
    const StepState s{c, NodalField(c.node_count(), 0.0), NodalField(c.node_count(), 0.0)};
    EXPECT_THROW(SchemeAssembler({FlowKind::Intermediate, SchemeVariant::Stabilized, 0.0, 1.0}, b, s, 1e-3), Error);
    EXPECT_THROW(SchemeAssembler({FlowKind::Intermediate, SchemeVariant::Stabilized, 1.0, -1.0}, b, s, 1e-3), Error);
    EXPECT_THROW(SchemeAssembler({}, b, s, 0.0), Error);
    StepState wrong = s;
    wrong.curvature.pop_back();
    EXPECT_THROW(SchemeAssembler({}, b, wrong, 1e-3), Error);
}

TEST(Jacobian, MatchesFiniteDifferences) {
    std::mt19937 rng(1);
    for (const auto& st : setups())
        for (auto kind : kKinds)
            for (auto var : kVariants) {
                const FlowSpec fs{kind, var, 1.2, 2.0};
                const StepState s0 = initial_state(st.curve, st.bspec, fs);
                const SchemeAssembler as(fs, st.bspec, s0, 1e-3);
                const StepState t = perturbed(moved(as, s0, rng, 0.005), rng, 0.01);
                const auto sys = as.assemble(t);
                const Vector v = random_direction(as.dofs().size(), rng);
                const Vector jv = sys.jacobian.multiply(v);
                const double scale = std::max(1.0, jv.lpNorm<Eigen::Infinity>());
                std::array<double, 2> fwd{};
                int k = 0;
                for (double eps : {1e-4, 1e-6}) {
                    const Vector fd = (as.residual(as.apply_increment(t, eps * v)) - sys.residual) / eps;
                    fwd[static_cast<std::size_t>(k++)] = (fd - jv).lpNorm<Eigen::Infinity>() / scale;
                }
                const Vector central = (as.residual(as.apply_increment(t, 1e-6 * v)) -
                                        as.residual(as.apply_increment(t, -1e-6 * v))) / 2e-6;
                const std::string tag = st.name + " " + to_string(kind) + " " + to_string(var);
                // forward differences are first order in eps; the central one is far tighter
                EXPECT_LT(fwd[0], 1e-2) << tag;
                EXPECT_LT(fwd[1], 1e-4) << tag;
                EXPECT_LT((central - jv).lpNorm<Eigen::Infinity>() / scale, 1e-6) << tag;
            }
}

TEST(Jacobian, SparsityIsNearestNeighbour) {
    auto [c, b] = generate({shape::RoundedCylinder{1, 3}, 20});
    for (auto kind : kKinds) {
        const FlowSpec fs{kind, SchemeVariant::Stabilized};
        const auto s = initial_state(c, b, fs);
        const SchemeAssembler as(fs, b, s, 1e-3);
        const auto sys = as.assemble(s);
        const auto& dm = as.dofs();
        // unknowns of non-neighbouring nodes never couple outside the rank-one term
        const Eigen::MatrixXd band = sys.jacobian.to_dense() -
            (sys.jacobian.has_rank_one()
                 ? Eigen::MatrixXd(sys.jacobian.rank_one_u() * sys.jacobian.rank_one_v().transpose())
                 : Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dm.size()), static_cast<Eigen::Index>(dm.size())));
        std::vector<std::size_t> node_of(dm.size());
        for (std::size_t i = 0; i < dm.node_count(); ++i)
            for (int comp : {dm.position(i, 0), dm.position(i, 1), dm.curvature(i), dm.potential(i)})
                if (comp >= 0) node_of[static_cast<std::size_t>(comp)] = i;
        for (Eigen::Index i = 0; i < band.rows(); ++i)
            for (Eigen::Index j = 0; j < band.cols(); ++j) {
                const auto ni = node_of[static_cast<std::size_t>(i)], nj = node_of[static_cast<std::size_t>(j)];
                if ((ni > nj ? ni - nj : nj - ni) > 1) {
                    EXPECT_EQ(band(i, j), 0.0);
                }
            }
        EXPECT_EQ(sys.jacobian.has_rank_one(), kind == FlowKind::ConservedMeanCurvature);
    }
}
