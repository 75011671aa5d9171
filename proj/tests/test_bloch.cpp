#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "test_util.hpp"

using namespace blochsc;
using testutil::unit1;
using testutil::unit2;

TEST(Spectral, ParsevalAndRoundTrip) {
    const auto b = SpectralBasis<2>::make(Lattice<2>({Vec<2>{1.0, 0.0}, Vec<2>{0.3, 1.2}}), 8);
    std::mt19937_64 rng(4);
    const auto u = testutil::smooth_field<2>(b, rng, 0.05);
    const auto s = u.samples();
    double grid = 0.0;
    for (const auto& v : s) grid += std::norm(v);
    EXPECT_NEAR(grid * b->point_weight(), u.norm2(), 1e-12);
    const auto back = PeriodicField<2>::from_samples(b, s);
    EXPECT_LT(max_abs_diff(u, back), 1e-13);
    for (std::size_t j = 0; j < b->size(); j += 37) EXPECT_LT(std::abs(u(b->point(j)) - s[j]), 1e-12);
    EXPECT_EQ(b->size(), 17u * 17u);
    EXPECT_NEAR(PeriodicField<2>::constant(b).norm2(), 1.0, 1e-15);
}

TEST(KGridTest, WeightsAndCell) {
    const Lattice<2> lat({Vec<2>{1.0, 0.0}, Vec<2>{0.5, 0.8}});
    const KGrid<2> g(lat, 6);
    double s = 0.0;
    for (double w : g.weights) s += w;
    EXPECT_NEAR(s, 1.0, 1e-12);
    for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_EQ(g.weights[i], g.weights[0]);
        for (int a = 0; a < 2; ++a) {
            const double r = dot<2>(g.points[i], lat.a(a)) / two_pi;
            EXPECT_GE(r, -0.5);
            EXPECT_LT(r, 0.5);
        }
    }
}

TEST(FiberAverage, Examples) {
    EXPECT_EQ(fiber_average(std::vector<double>(7, 2.5)), 2.5);
    EXPECT_EQ(fiber_average(std::vector<double>{0.0, 1.0}), 0.5);
    EXPECT_THROW(fiber_average(std::vector<double>{}), DomainError);
    // linear in k is exact on the shifted grid; the quadratic error decays like N_k^-2
    const auto lat = unit1();
    auto err = [&](int nk, int power) {
        const KGrid<1> g(lat, nk);
        std::vector<double> v;
        for (const auto& r : g.reduced) v.push_back(std::pow(r[0], power) + 0.3 * r[0]);
        const double exact = power == 1 ? 0.0 : 1.0 / 12.0;
        return std::abs(fiber_average(v) - exact);
    };
    EXPECT_LT(err(16, 1), 1e-16);
    const double e8 = err(8, 2), e16 = err(16, 2);
    EXPECT_GT(e8, 0.0);
    EXPECT_NEAR(e8 / e16, 4.0, 1e-6);
}

TEST(Bloch, SingleCellSupport) {
    const auto b = SpectralBasis<1>::make(unit1(), 32);
    const SampledFunction<1> u = [](const Vec<1>& x) {
        const double r = x[0] / 0.4;
        return std::abs(r) < 1.0 ? cplx{std::exp(-1.0 / (1.0 - r * r)), 0.3 * r} : cplx{0.0, 0.0};
    };
    const KGrid<1> g(unit1(), 4);
    const auto F = bloch_transform<1>(u, g, b, 2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto s = F.fibers[i].samples();
        for (std::size_t j = 0; j < b->size(); ++j) {
            const auto& x = b->point(j);
            EXPECT_LT(std::abs(s[j] - u(x) * std::polar(1.0, -g.points[i][0] * x[0])), 1e-14);
        }
    }
}

TEST(Bloch, TranslateWindowTooSmallThrows) {
    const auto b = SpectralBasis<1>::make(unit1(), 16);
    const SampledFunction<1> u = [](const Vec<1>& x) { return cplx{std::exp(-x[0] * x[0]), 0.0}; };
    EXPECT_THROW(bloch_transform<1>(u, KGrid<1>(unit1(), 4), b, 1), AccuracyError);
}

TEST(Bloch, IsometryRandomPackets1D) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 64);
    const KGrid<1> g(lat, 32);
    std::mt19937_64 rng(11);
    const double hbar = 0.1;
    const int L = translate_window_for(hbar, 0.5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto w = random_packet<1>(rng, lat, hbar, 2.0, 3);
        const auto F = bloch_transform<1>(w, g, b, L);
        const double n = w.norm2();
        EXPECT_LE(std::abs(F.norm2() - n), 1e-10 * n) << "trial " << trial;
    }
}

TEST(Bloch, IsometryRandomPackets2DSmoke) {
    const auto lat = unit2();
    const auto b = SpectralBasis<2>::make(lat, 16);
    const KGrid<2> g(lat, 8);
    std::mt19937_64 rng(12);
    const double hbar = 0.1;
    const int L = translate_window_for(hbar, 0.5);
    for (int trial = 0; trial < 3; ++trial) {
        const auto w = random_packet<2>(rng, lat, hbar, 1.0, 2);
        const auto F = bloch_transform<2>(w, g, b, L);
        const double n = w.norm2();
        EXPECT_LE(std::abs(F.norm2() - n), 1e-10 * n) << "trial " << trial;
    }
}

TEST(Bloch, CoherentStateFibers) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 64);
    const KGrid<1> g(lat, 8);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> uq(-0.5, 0.5), up(-2.0, 2.0);
    for (double hbar : {0.1, 0.02}) {
        const int L = translate_window_for(hbar, 0.5);
        for (int trial = 0; trial < 10; ++trial) {
            const CoherentParams<1> s{{uq(rng)}, {up(rng)}, hbar};
            const auto F = bloch_transform<1>([&](const Vec<1>& y) { return coherent_state<1>(s, y); }, g, b, L);
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto ref = periodized_coherent<1>({s.q, s.p - hbar * g.points[i], hbar}, b);
                EXPECT_LE(max_abs_diff(F.fibers[i], ref), 1e-9);
            }
        }
    }
}

TEST(Bloch, InverseRoundTrip) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 64);
    const KGrid<1> g(lat, 32);
    const SampledFunction<1> bump = [](const Vec<1>& x) { return cplx{std::exp(-(x[0] - 0.2) * (x[0] - 0.2) / 0.08), 0.0}; };
    const CoherentParams<1> cs{{0.0}, {1.0}, 0.05};
    const SampledFunction<1> coh = [&](const Vec<1>& y) { return coherent_state<1>(cs, y); };
    for (const auto* u : {&bump, &coh}) {
        const auto F = bloch_transform<1>(*u, g, b, 8);
        const auto w = inverse_bloch_window<1>(F, 3);
        double err = 0.0;
        for (std::size_t s = 0; s < w.shifts.size(); ++s)
            for (std::size_t j = 0; j < b->size(); ++j)
                err = std::max(err, std::abs(w.values[s][j] - (*u)(b->point(j) + w.offsets[s])));
        EXPECT_LT(err, 1e-8);
        for (double x : {-1.3, 0.37, 2.2}) EXPECT_LT(std::abs(inverse_bloch<1>(F, {x}) - (*u)({x})), 1e-8);
    }
}

TEST(Bloch, SingleFiberIdentity) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 4);
    FiberedState<1> F{b, KGrid<1>::from_points(lat, {Vec<1>{0.0}}), {PeriodicField<1>::constant(b)}};
    for (double x : {-0.3, 0.1, 4.7}) EXPECT_NEAR(std::abs(inverse_bloch<1>(F, {x}) - 1.0), 0.0, 1e-14);
}

TEST(BlochProperty, QuasiPeriodicity) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 48);
    const CoherentParams<1> s{{0.1}, {0.4}, 0.05};
    const auto w = TranslateWindow<1>::sample([&](const Vec<1>& y) { return coherent_state<1>(s, y); }, *b, 6);
    const Vec<1> k{0.7};
    const auto a = bloch_fiber<1>(w, b, k);
    const auto c = bloch_fiber<1>(w, b, k + lat.b(0));
    EXPECT_LT(max_abs_diff(c, shift_quasimomentum<1>(a, {1})), 1e-12);
}

TEST(BlochProperty, PeriodicMultiplicationCommutes) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 64);
    const TrigPotential<1> V(lat, {{{1}, 0.3, 0.2}, {{2}, -0.1, 0.0}});
    const CoherentParams<1> s{{-0.2}, {0.5}, 0.05};
    const SampledFunction<1> u = [&](const Vec<1>& y) { return coherent_state<1>(s, y); };
    const SampledFunction<1> Vu = [&](const Vec<1>& y) { return V(y) * coherent_state<1>(s, y); };
    const KGrid<1> g(lat, 6);
    const auto F = bloch_transform<1>(u, g, b, 8);
    const auto FV = bloch_transform<1>(Vu, g, b, 8);
    const auto big = SpectralBasis<1>::make(lat, 66);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto prod = multiply_potential<1>(V, F.fibers[i], big);
        EXPECT_LT(max_abs_diff(prod, rebase<1>(FV.fibers[i], big)), 1e-12);
    }
}

TEST(States, CoherentStateExamples) {
    const CoherentParams<1> s0{{0.0}, {0.0}, 1.0};
    EXPECT_NEAR(std::real(coherent_state<1>(s0, {0.0})), std::pow(pi, -0.25), 1e-15);
    const CoherentParams<1> s{{0.3}, {1.2}, 0.05};
    for (double d : {0.01, 0.1, 0.4})
        EXPECT_NEAR(std::abs(coherent_state<1>(s, {0.3 + d})), std::abs(coherent_state<1>(s, {0.3 - d})), 1e-15);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double r = 10.0 * std::sqrt(s.hbar);
    const double n = GK::integrate([&](double y) { return std::norm(coherent_state<1>(s, {y})); }, 0.3 - r, 0.3 + r, 15, 1e-14);
    EXPECT_NEAR(n, 1.0, 1e-10);
    s.validate();
    EXPECT_THROW((CoherentParams<1>{{0.0}, {0.0}, 0.0}.validate()), DomainError);
}

TEST(States, ClosedFormMatchesLatticeSum) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 64);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> uq(-0.5, 0.5), up(-1.5, 1.5), uk(-pi, pi);
    for (double hbar : {0.1, 0.02}) {
        for (int t = 0; t < 5; ++t) {
            const CoherentParams<1> s{{uq(rng)}, {up(rng) - hbar * uk(rng)}, hbar};
            const auto a = periodized_coherent<1>(s, b);
            const auto c = periodized_coherent_sum<1>(s, b, translate_window_for(hbar, 0.5));
            EXPECT_LT(max_abs_diff(a, c), 1e-10);
        }
    }
    EXPECT_THROW(periodized_coherent_sum<1>({{0.0}, {0.0}, 0.5}, b, 1), AccuracyError);
}

TEST(States, ClosedFormMatchesLatticeSum2D) {
    const Lattice<2> lat({Vec<2>{1.0, 0.0}, Vec<2>{0.4, 0.9}});
    const auto b = SpectralBasis<2>::make(lat, 16);
    const CoherentParams<2> s{{0.1, -0.2}, {0.3, 0.5}, 0.1};
    const auto a = periodized_coherent<2>(s, b);
    const auto c = periodized_coherent_sum<2>(s, b, translate_window_for(0.1, lat.geometry().gamma_minus));
    EXPECT_LT(max_abs_diff(a, c), 1e-10);
}

// The projector is periodic in q; the state itself picks up exp(i p.l / hbar).
TEST(States, PeriodicityInQ) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 48);
    const double hbar = 0.05;
    const CoherentParams<1> s{{0.2}, {0.7}, hbar};
    const CoherentParams<1> sl{{1.2}, {0.7}, hbar};
    const auto a = periodized_coherent<1>(s, b), c = periodized_coherent<1>(sl, b);
    const cplx ph = std::polar(1.0, 0.7 * 1.0 / hbar);
    double err = 0.0, proj = 0.0;
    for (std::size_t i = 0; i < a.c.size(); ++i) {
        err = std::max(err, std::abs(c.c[i] - ph * a.c[i]));
        for (std::size_t j = 0; j < a.c.size(); ++j)
            proj = std::max(proj, std::abs(c.c[i] * std::conj(c.c[j]) - a.c[i] * std::conj(a.c[j])));
    }
    EXPECT_LT(err, 1e-12);
    EXPECT_LT(proj, 1e-12);
    const CoherentParams<1> s2{{0.2}, {two_pi * hbar * 3.0}, hbar}, s2l{{-1.8}, {two_pi * hbar * 3.0}, hbar};
    EXPECT_LT(max_abs_diff(periodized_coherent<1>(s2, b), periodized_coherent<1>(s2l, b)), 1e-12);
}

TEST(States, CentredCoefficientsRealAndEven) {
    const auto b = SpectralBasis<1>::make(unit1(), 32);
    const auto a = periodized_coherent<1>({{0.0}, {0.0}, 0.05}, b);
    for (std::size_t i = 0; i < a.c.size(); ++i) {
        EXPECT_EQ(std::imag(a.c[i]), 0.0);
        IVec<1> n = b->index(i);
        n[0] = -n[0];
        EXPECT_EQ(a.c[i], a.c[b->flat_of(n)]);
    }
}

TEST(States, FiberNormalization) {
    const auto lat = unit1();
    const auto b = SpectralBasis<1>::make(lat, 64);
    const KGrid<1> g(lat, 32);
    for (double hbar : {0.1, 0.02}) {
        std::vector<double> n;
        for (const auto& k : g.points) n.push_back(periodized_coherent<1>({{0.31}, {0.8 - hbar * k[0]}, hbar}, b).norm2());
        EXPECT_NEAR(fiber_average(n), 1.0, 1e-8);
    }
    EXPECT_NEAR(periodized_coherent<1>({{0.0}, {0.0}, 0.01}, b).norm2(), 1.0, 1e-10);
}

TEST(States, GaussianMoments) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    for (double hbar : {0.1, 0.01}) {
        const double c = 1.0 / std::sqrt(pi * hbar), r = 12.0 * std::sqrt(hbar);
        const double m2 = GK::integrate([&](double x) { return c * x * x * std::exp(-x * x / hbar); }, -r, r, 15, 1e-15);
        const double m1 = GK::integrate([&](double x) { return c * x * std::exp(-x * x / hbar); }, -r, r, 15, 1e-15);
        EXPECT_NEAR(m2, hbar / 2.0, 1e-10);
        EXPECT_NEAR(m1, 0.0, 1e-10);
    }
}

TEST(States, WavePacketNormMatchesQuadrature) {
    std::mt19937_64 rng(5);
    const auto w = random_packet<1>(rng, unit1(), 0.05, 1.0, 4);
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double n = GK::integrate([&](double y) { return std::norm(w({y})); }, -3.0, 3.0, 20, 1e-14);
    EXPECT_NEAR(w.norm2(), n, 1e-10 * n);
}
