#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "test_util.hpp"

using namespace blochsc;

TEST(Lattice, ProjectionExamples) {
    const auto l1 = Lattice<1>::cubic();
    auto p = project_to_cell<1>({0.7}, l1);
    EXPECT_NEAR(p.point[0], -0.3, 1e-15);
    EXPECT_EQ(p.coords[0], 1);
    p = project_to_cell<1>({0.0}, l1);
    EXPECT_EQ(p.point[0], 0.0);
    EXPECT_EQ(p.coords[0], 0);

    const auto l2 = Lattice<2>::cubic();
    const auto q = project_to_cell<2>({0.6, -0.7}, l2);
    EXPECT_NEAR(q.point[0], -0.4, 1e-15);
    EXPECT_NEAR(q.point[1], 0.3, 1e-15);
    EXPECT_EQ(q.coords[0], 1);
    EXPECT_EQ(q.coords[1], -1);
}

TEST(Lattice, BoundaryMapsToLowerFace) {
    const auto l1 = Lattice<1>::cubic();
    EXPECT_EQ(l1.reduce({0.5})[0], -0.5);
    EXPECT_EQ(l1.reduce({-0.5})[0], -0.5);
}

TEST(Lattice, RejectsBadInput) {
    const auto l1 = Lattice<1>::cubic();
    EXPECT_THROW(l1.project({std::nan("")}), DomainError);
    EXPECT_THROW(l1.project({INFINITY}), DomainError);
    EXPECT_THROW((Lattice<2>({Vec<2>{1.0, 2.0}, Vec<2>{2.0, 4.0}})), DomainError);
}

TEST(Lattice, ReciprocalDuality) {
    const Lattice<3> lat({Vec<3>{1.0, 0.2, 0.0}, Vec<3>{0.3, 1.1, 0.1}, Vec<3>{-0.2, 0.1, 0.9}});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            EXPECT_NEAR(dot<3>(lat.b(i), lat.a(j)), i == j ? two_pi : 0.0, 1e-12 * two_pi);
}

TEST(Lattice, GammaBoundsCubic) {
    auto g = gamma_bounds<1>(Lattice<1>::cubic());
    EXPECT_DOUBLE_EQ(g.gamma_minus, 0.5);
    EXPECT_DOUBLE_EQ(g.gamma_plus, 0.5);
    g = gamma_bounds<2>(Lattice<2>::cubic());
    EXPECT_DOUBLE_EQ(g.gamma_minus, 0.5);
    EXPECT_NEAR(g.gamma_plus, std::sqrt(2.0) / 2.0, 1e-15);
    g = gamma_bounds<1>(Lattice<1>::cubic(2.0));
    EXPECT_DOUBLE_EQ(g.gamma_minus, 1.0);
    EXPECT_DOUBLE_EQ(g.gamma_plus, 1.0);
    g = gamma_bounds<3>(Lattice<3>::cubic());
    EXPECT_NEAR(g.gamma_minus, 0.5, 1e-4 * 0.5);
    EXPECT_NEAR(g.gamma_plus, std::sqrt(3.0) / 2.0, 1e-15);
}

// Dense boundary scan of the parallelepiped as the oracle for a skew lattice.
TEST(Lattice, GammaBoundsSkewMatchesBoundaryScan) {
    const Lattice<2> lat({Vec<2>{1.0, 0.0}, Vec<2>{0.7, 0.4}});
    const auto g = lat.geometry();
    double lo = INFINITY, hi = 0.0;
    const int n = 200000;
    for (int face = 0; face < 4; ++face)
        for (int i = 0; i <= n; ++i) {
            const double s = -0.5 + static_cast<double>(i) / n;
            const double fixed = face % 2 ? 0.5 : -0.5;
            const Vec<2> t = face < 2 ? Vec<2>{fixed, s} : Vec<2>{s, fixed};
            const double r = norm<2>(lat.to_cartesian(t));
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    EXPECT_NEAR(g.gamma_minus, lo, 1e-9);
    EXPECT_NEAR(g.gamma_plus, hi, 1e-12);
    EXPECT_LE(g.gamma_minus, g.gamma_plus);
}

TEST(Theta, Examples) {
    const CellGeometry g{0.5, 0.5};
    EXPECT_EQ(theta(0.0, g), 0.0);
    auto integrand = [&](double s) { return std::max(0.0, 1.0 - s / g.gamma_minus); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double q05 = GK::integrate(integrand, 0.0, 0.5, 10, 1e-14);
    const double q20 = GK::integrate(integrand, 0.0, 0.5, 10, 1e-14) + GK::integrate(integrand, 0.5, 2.0, 10, 1e-14);
    EXPECT_NEAR(q05, 0.25, 1e-13);
    EXPECT_NEAR(theta(0.5, g), 0.25, 1e-15);
    EXPECT_NEAR(theta(0.5, g), q05, 1e-13);
    EXPECT_NEAR(theta(2.0, g), 0.25, 1e-15);
    EXPECT_NEAR(theta(2.0, g), q20, 1e-13);
    EXPECT_THROW(theta(-1e-3, g), DomainError);
    EXPECT_THROW(theta_prime(-1.0, g), DomainError);
}

TEST(LatticeProperty, ProjectionDiffersByLatticeVector) {
    const Lattice<2> lat({Vec<2>{1.0, 0.0}, Vec<2>{0.4, 0.9}});
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int i = 0; i < 10000; ++i) {
        const Vec<2> z{u(rng), u(rng)};
        const auto p = lat.project(z);
        const Vec<2> t = lat.to_lattice(z - p.point);
        for (int a = 0; a < 2; ++a) {
            EXPECT_NEAR(t[a], std::round(t[a]), 1e-9);
            const double c = lat.to_lattice(p.point)[a];
            EXPECT_GE(c, -0.5 - 1e-12);
            EXPECT_LT(c, 0.5 + 1e-12);
        }
    }
}

TEST(LatticeProperty, ProjectionIsOdd) {
    const auto lat = Lattice<2>::cubic();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    int checked = 0;
    while (checked < 2000) {
        const Vec<2> z{u(rng), u(rng)};
        const Vec<2> t = lat.to_lattice(z);
        bool near_boundary = false;
        for (double v : t) near_boundary |= std::abs(v - std::floor(v) - 0.5) < 1e-6;
        if (near_boundary) continue;
        const auto a = lat.reduce(z), b = lat.reduce(-z);
        EXPECT_NEAR(a[0], -b[0], 1e-12);
        EXPECT_NEAR(a[1], -b[1], 1e-12);
        ++checked;
    }
}

TEST(LatticeProperty, ThetaShape) {
    for (const auto& g : {gamma_bounds<1>(Lattice<1>::cubic()), gamma_bounds<2>(Lattice<2>::cubic()),
                          gamma_bounds<3>(Lattice<3>::cubic())}) {
        double prev = 0.0;
        const double rmax = g.gamma_plus * g.gamma_plus;
        for (int i = 0; i <= 2000; ++i) {
            const double r = rmax * i / 2000.0;
            const double th = theta(r, g);
            EXPECT_GE(th, prev);
            EXPECT_LE(th, r + 1e-15);
            EXPECT_GE(th, g.gamma_minus / (2.0 * g.gamma_plus) * r - 1e-15);
            const double tp = theta_prime(r, g);
            EXPECT_GE(tp, 0.0);
            EXPECT_LE(tp, 1.0);
            prev = th;
        }
    }
}

TEST(LatticeProperty, ProjectionShortensDistanceOnCubicCells) {
    const auto lat = Lattice<2>::cubic();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 5000; ++i) {
        const Vec<2> x{u(rng), u(rng)}, y{u(rng), u(rng)};
        EXPECT_LE(norm<2>(lat.reduce(x - y)), norm<2>(x - y) + 1e-12);
    }
}
