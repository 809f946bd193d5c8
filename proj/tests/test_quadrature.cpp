#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "axiflow/geometry.hpp"
#include "axiflow/quadrature.hpp"

using namespace axiflow;

namespace {

constexpr double pi = std::numbers::pi;

Curve circle_polygon(std::size_t J, Vec2 center, double radius, double phase = 0.0) {
    Curve c;
    c.topology = Topology::Closed;
    for (std::size_t j = 0; j < J; ++j) {
        const double t = phase + 2 * pi * static_cast<double>(j) / static_cast<double>(J);
        c.nodes.push_back(center + radius * Vec2(std::sin(t), std::cos(t)));
    }
    return c;
}

// Random star-shaped closed curve around (3, 0), clockwise.
Curve random_closed(std::size_t J, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double a1 = 0.3 * u(rng), a2 = 0.2 * u(rng), ph = pi * u(rng);
    Curve c;
    c.topology = Topology::Closed;
    for (std::size_t j = 0; j < J; ++j) {
        const double t = 2 * pi * (static_cast<double>(j) + 0.3 * u(rng)) / static_cast<double>(J);
        const double rad = 1.0 + a1 * std::cos(2 * t + ph) + a2 * std::sin(3 * t);
        c.nodes.push_back(Vec2(3.0, 0.0) + rad * Vec2(std::sin(t), std::cos(t)));
    }
    return c;
}

double simpson(const std::function<double(double)>& f, int n) {
    double s = f(0) + f(1);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(static_cast<double>(i) / n);
    return s / (3.0 * n);
}

// M(new) - M(old) = int_0^1 dM/dalpha along X_alpha = old + alpha (new - old), with
// dM/dalpha = 2 pi int (new - old) . r_alpha nu_alpha |X_alpha,rho| drho; Simpson in alpha and in rho.
double path_oracle(const Curve& old_c, const Curve& new_c) {
    auto rate = [&](double alpha) {
        double sum = 0.0;
        for (std::size_t e = 0; e < old_c.element_count(); ++e) {
            auto [a, b] = old_c.element_nodes(e);
            const Vec2 Da = new_c.nodes[a] - old_c.nodes[a], Db = new_c.nodes[b] - old_c.nodes[b];
            const Vec2 Xa = old_c.nodes[a] + alpha * Da, Xb = old_c.nodes[b] + alpha * Db;
            const Vec2 rnu = -perp(Xb - Xa);  // nu |X_rho| h
            sum += simpson([&](double s) { return ((1 - s) * Da + s * Db).dot(rnu) * ((1 - s) * Xa.x() + s * Xb.x()); }, 20);
        }
        return 2 * pi * sum;
    };
    return simpson(rate, 20);
}

} // namespace

TEST(LumpedInner, Constants) {
    for (std::size_t J : {3u, 7u, 64u}) {
        Curve c = circle_polygon(J, {5, 0}, 1);
        const auto one = from_nodal(NodalField(J, 1.0), c);
        EXPECT_NEAR(lumped_inner(one, one, c), 1.0, 1e-14);
    }
}

TEST(LumpedInner, ElementwiseConstantsExact) {
    Curve c = circle_polygon(10, {5, 0}, 1);
    ElementwiseField<double> v, w;
    double exact = 0.0;
    for (std::size_t e = 0; e < 10; ++e) {
        const double a = 0.3 * static_cast<double>(e) - 1.0, b = std::cos(static_cast<double>(e));
        v.ends.push_back({a, a});
        w.ends.push_back({b, b});
        exact += a * b / 10.0;
    }
    EXPECT_NEAR(lumped_inner(v, w, c), exact, 1e-15);
}

TEST(LumpedInner, InteriorHat) {
    Curve c{{{1, 0}, {1, 0.25}, {1, 0.5}, {1, 0.75}, {1, 1}}, Topology::Open};
    NodalField hat(5, 0.0);
    hat[2] = 1.0;
    const auto v = from_nodal(hat, c);
    EXPECT_DOUBLE_EQ(lumped_inner(v, v, c), 0.25);
}

TEST(LumpedInner, SymmetricBilinearAndTrapezoid) {
    std::mt19937 rng(2);
    std::normal_distribution<double> nd;
    Curve c = circle_polygon(12, {5, 0}, 1);
    NodalField a(12), b(12);
    for (auto& x : a) x = nd(rng);
    for (auto& x : b) x = nd(rng);
    const auto A = from_nodal(a, c), B = from_nodal(b, c);
    EXPECT_DOUBLE_EQ(lumped_inner(A, B, c), lumped_inner(B, A, c));
    NodalField a2(12);
    for (std::size_t i = 0; i < 12; ++i) a2[i] = 2.5 * a[i] - b[i];
    EXPECT_NEAR(lumped_inner(from_nodal(a2, c), B, c), 2.5 * lumped_inner(A, B, c) - lumped_inner(B, B, c), 1e-13);
    double trap = 0.0;
    for (std::size_t e = 0; e < 12; ++e) trap += 0.5 * (a[e] * b[e] + a[(e + 1) % 12] * b[(e + 1) % 12]) / 12.0;
    EXPECT_NEAR(lumped_inner(A, B, c), trap, 1e-14);
}

TEST(WeightedNormal, EqualLevelsGiveScaledNormal) {
    for (double r : {1.0, 2.5}) {
        Curve c{{{r, 0}, {r, 1}}, Topology::Open};
        const auto f = weighted_normal(c, c);
        for (int k = 0; k < 2; ++k) {
            EXPECT_DOUBLE_EQ(f.ends[0][k].x(), -r);
            EXPECT_DOUBLE_EQ(f.ends[0][k].y(), 0.0);
        }
    }
    // r varies along the element: f = r(rho) |X_rho| nu at each end
    Curve c{{{1, 0}, {2, 0}, {3, 0}, {4, 0}}, Topology::Open};
    const auto f = weighted_normal(c, c);
    const auto g = element_geometry(c);
    for (std::size_t e = 0; e < 3; ++e)
        for (int k = 0; k < 2; ++k)
            EXPECT_NEAR((f.ends[e][k] - c.nodes[e + static_cast<std::size_t>(k)].x() * g.speed[e] * g.normal[e]).norm(),
                        0.0, 1e-13);
}

TEST(WeightedNormal, SymmetricInLevels) {
    std::mt19937 rng(4);
    const auto a = random_closed(40, rng), b = random_closed(40, rng);
    const auto f = weighted_normal(a, b), g = weighted_normal(b, a);
    for (std::size_t e = 0; e < 40; ++e)
        for (int k = 0; k < 2; ++k) EXPECT_EQ(f.ends[e][k], g.ends[e][k]);
}

TEST(WeightedNormal, TopologyMismatch) {
    std::mt19937 rng(4);
    const auto a = random_closed(10, rng);
    Curve b = a;
    b.topology = Topology::Open;
    EXPECT_THROW(weighted_normal(a, b), Error);
    EXPECT_THROW(weighted_normal(a, random_closed(11, rng)), Error);
}

TEST(WeightedNormal, VolumeIdentity) {
    std::mt19937 rng(12345);
    int checked = 0;
    for (std::size_t J : {8u, 32u, 128u}) {
        for (int trial = 0; trial < 34; ++trial) {
            const Curve old_c = random_closed(J, rng);
            Curve new_c = old_c;
            std::normal_distribution<double> nd(0.0, 0.05);
            for (auto& x : new_c.nodes) x += Vec2(nd(rng), nd(rng));
            const auto f = weighted_normal(old_c, new_c);
            const double lhs = discrete_volume(new_c, BoundarySpec::none()) - discrete_volume(old_c, BoundarySpec::none());
            const double rhs = 2 * pi * weighted_normal_pairing(old_c, new_c, f);
            const double oracle = path_oracle(old_c, new_c);
            const double scale = std::abs(discrete_volume(old_c, BoundarySpec::none()));
            EXPECT_NEAR(rhs, oracle, 1e-12 * scale) << "J=" << J;
            EXPECT_NEAR(lhs, oracle, 1e-12 * scale) << "J=" << J;
            ++checked;
        }
    }
    EXPECT_GE(checked, 100);
}

TEST(VertexNormal, StraightSegment) {
    Curve c{{{1, 2}, {1.5, 1.5}, {2, 1}, {2.5, 0.5}}, Topology::Open};
    const auto w = vertex_normal(c);
    const auto g = element_geometry(c);
    for (const auto& x : w) EXPECT_NEAR((x - g.normal[0]).norm(), 0.0, 1e-15);
}

TEST(VertexNormal, EqualNeighboursAverage) {
    Curve c{{{1, 1}, {2, 0}, {1, -1}}, Topology::Open};
    const auto g = element_geometry(c);
    const auto w = vertex_normal(c);
    EXPECT_NEAR((w[1] - 0.5 * (g.normal[0] + g.normal[1])).norm(), 0.0, 1e-15);
}

TEST(VertexNormal, RegularPolygonIsRadialAndShort) {
    const Vec2 center(4, 1);
    const auto c = circle_polygon(24, center, 0.5, 0.1);
    const auto w = vertex_normal(c);
    for (std::size_t j = 0; j < 24; ++j) {
        const Vec2 radial = (c.nodes[j] - center).normalized();
        EXPECT_LT(w[j].norm(), 1.0);
        EXPECT_NEAR(w[j].x() * radial.y() - w[j].y() * radial.x(), 0.0, 1e-14);
        EXPECT_GT(w[j].dot(radial), 0.0);
    }
}

TEST(VertexNormal, VariationalIdentity) {
    std::mt19937 rng(8);
    const auto c = random_closed(30, rng);
    const auto w = vertex_normal(c);
    const auto g = element_geometry(c);
    const double h = c.h();
    for (std::size_t k = 0; k < 30; ++k) {
        // <omega, phi_k |X_rho|>^h against the exact <nu, phi_k |X_rho|>
        Vec2 lhs = Vec2::Zero(), rhs = Vec2::Zero();
        for (std::size_t e : {(k + 29) % 30, k}) {
            lhs += 0.5 * h * g.speed[e] * w[k];
            rhs += 0.5 * h * g.speed[e] * g.normal[e];
        }
        EXPECT_NEAR((lhs - rhs).norm(), 0.0, 1e-15);
    }
}

TEST(LambdaHalf, AxisNodesTakeMinusKappa) {
    Curve c{{{0, 1}, {0.7, 0.7}, {1, 0}, {0.7, -0.7}, {0, -1}}, Topology::Open};
    const auto b = BoundarySpec::open({EndpointClass::Axis, 0}, {EndpointClass::Axis, 0});
    const NodalField kappa{-2.1, 0, 0, 0, -1.9};
    const auto lam = lambda_half(c, kappa, b);
    EXPECT_DOUBLE_EQ(lam[0], 2.1);
    EXPECT_DOUBLE_EQ(lam[4], 1.9);
    const auto w = vertex_normal(c);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(lam[i], w[i].x() / c.nodes[i].x());
}

TEST(LambdaHalf, Cylinder) {
    const double r0 = 0.8;
    Curve down, up;
    for (int j = 0; j <= 6; ++j) {
        down.nodes.emplace_back(r0, 3.0 - 0.5 * j);
        up.nodes.emplace_back(r0, 0.5 * j);
    }
    const auto b = BoundarySpec::open({EndpointClass::Plane, 0}, {EndpointClass::Plane, 0});
    const NodalField zero(7, 0.0);
    for (double l : lambda_half(down, zero, b)) EXPECT_NEAR(l, 1.0 / r0, 1e-15);
    for (double l : lambda_half(up, zero, b)) EXPECT_NEAR(l, -1.0 / r0, 1e-15);
}

TEST(LambdaHalf, ZeroRadiusOffAxis) {
    Curve c{{{0, 1}, {1, 0}, {0, -1}, {1, -2}}, Topology::Open};
    const auto b = BoundarySpec::open({EndpointClass::Axis, 0}, {EndpointClass::Plane, 0});
    EXPECT_THROW(lambda_half(c, NodalField(4, 0.0), b), DegenerateMesh);
}
