// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: blochsc_acceptance <path to blochsc> <source dir> <scratch dir>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include <blochsc/blochsc.hpp>

using namespace blochsc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream note;
    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            note << " [failed: " << what << "]";
        }
    }
};

std::string cli, source, scratch;

int run_cli(const std::string& cmd, const std::string& cfg, const std::string& out) {
    const std::string line = "\"" + cli + "\" " + cmd + " --config \"" + source + "/configs/" + cfg + "\" --out \"" +
                             scratch + "/" + out + "\" > \"" + scratch + "/" + out + ".log\" 2>&1";
    fs::create_directories(scratch);
    const int rc = std::system(line.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::map<std::string, double> read_named(const fs::path& p) {
    std::map<std::string, double> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line == "name,value") continue;
        const auto c = line.find(',');
        out[line.substr(0, c)] = std::stod(line.substr(c + 1));
    }
    return out;
}

double max_ratio(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    double worst = -INFINITY;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == 't') continue;
        worst = std::max(worst, std::stod(line.substr(line.rfind(',') + 1)));
    }
    return worst;
}

void isometry(Outcome& o) {
    const auto lat = Lattice<1>::cubic();
    const auto b = SpectralBasis<1>::make(lat, 64);
    const KGrid<1> g(lat, 32);
    std::mt19937_64 rng(2024);
    const double hbar = 0.1;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto w = random_packet<1>(rng, lat, hbar, 2.0, 3);
        const double n = w.norm2();
        worst = std::max(worst, std::abs(bloch_transform<1>(w, g, b, translate_window_for(hbar, 0.5)).norm2() - n) / n);
    }
    o.note << "max relative defect " << worst;
    o.check(worst <= 1e-10, "1e-10");
}

void coherent_identity(Outcome& o) {
    const auto lat = Lattice<1>::cubic();
    const auto b = SpectralBasis<1>::make(lat, 64);
    const KGrid<1> g(lat, 32);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uq(-0.5, 0.5), up(-2.0, 2.0);
    double worst = 0.0;
    for (double hbar : {0.1, 0.02})
        for (int i = 0; i < 10; ++i) {
            const CoherentParams<1> s{{uq(rng)}, {up(rng)}, hbar};
            const auto F = bloch_transform<1>([&](const Vec<1>& y) { return coherent_state<1>(s, y); }, g, b,
                                              translate_window_for(hbar, 0.5));
            for (std::size_t k = 0; k < g.size(); ++k)
                worst = std::max(worst, max_abs_diff(F.fibers[k], periodized_coherent<1>({s.q, s.p - hbar * g.points[k], hbar}, b)));
        }
    o.note << "max coefficient error " << worst;
    o.check(worst <= 1e-9, "1e-9");
}

void husimi_normalization(Outcome& o) {
    const auto lat = Lattice<1>::cubic();
    const double hbar = 0.04;
    const auto b = SpectralBasis<1>::make(lat, 64);
    const KGrid<1> g(lat, 8);
    const auto R1 = coherent_family<1>({0.1}, {1.0}, hbar, g, b);
    FiberedDensity<1> R4{b, g, hbar, {}};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uq(-0.5, 0.5), up(-1.0, 1.0), ul(0.1, 1.0);
    for (const auto& k : g.points) {
        DensityFiber<1> f;
        for (int m = 0; m < 4; ++m) {
            f.lambda.push_back(ul(rng));
            f.v.push_back(periodized_coherent<1>({{uq(rng)}, {up(rng) - hbar * k[0]}, hbar}, b));
        }
        R4.fibers.push_back(f);
    }
    R4 = R4.scaled(1.0 / periodic_trace(R4));
    const double e1 = std::abs(husimi(R1).mass() - 1.0), e4 = std::abs(husimi(R4).mass() - 1.0);
    // p-marginal: integral over p of the Husimi fiber equals the Gaussian smoothing of the position density
    const auto hc = coupling_energy_husimi(R1, lat.geometry());
    o.note << "rank-1 " << e1 << ", rank-4 " << e4 << ", marginal " << hc.marginal_error;
    o.check(e1 <= 1e-6 && e4 <= 1e-6, "mass 1e-6");
    o.check(hc.marginal_error <= 1e-6, "marginal 1e-6");
}

void toeplitz_bound(Outcome& o) {
    double worst = 0.0;
    for (double hbar : {0.1, 0.01})
        for (double lambda : {0.5, 1.0, 2.0}) {
            const auto l1 = Lattice<1>::cubic();
            const auto e1 = coupling_energy_toeplitz<1>(gaussian_bump<1>(l1, {0.1}, {0.5}, 0.1, 0.2, 8, 8),
                                                        {lambda, hbar, l1.geometry()}, KGrid<1>(l1, 8),
                                                        SpectralBasis<1>::make(l1, 64));
            const auto l2 = Lattice<2>::cubic();
            const auto e2 = coupling_energy_toeplitz<2>(gaussian_bump<2>(l2, {0.0, 0.1}, {0.5, 0.0}, 0.1, 0.05, 4, 4),
                                                        {lambda, hbar, l2.geometry()}, KGrid<2>(l2, 4),
                                                        SpectralBasis<2>::make(l2, 32));
            worst = std::max({worst, e1.total / e1.bound, e2.total / e2.bound});
        }
    o.note << "max energy/bound " << worst;
    o.check(worst <= 1.0 + 1e-6, "bound");
}

void pure_bound(Outcome& o) {
    const auto lat = Lattice<1>::cubic();
    double worst = 0.0, ident = 0.0;
    for (double hbar : {0.04, 0.02}) {
        const auto R = coherent_family<1>({0.1}, {0.5}, hbar, KGrid<1>(lat, 8), SpectralBasis<1>::make(lat, 64));
        const auto h = coupling_energy_husimi(R, lat.geometry());
        worst = std::max(worst, h.energy.total / h.energy.bound);
        ident = std::max(ident, std::abs(h.energy.momentum - h.momentum_identity));
    }
    o.note << "max energy/bound " << worst << ", momentum identity " << ident;
    o.check(worst <= 1.0 + 1e-3, "bound");
    o.check(ident <= 1e-8, "identity");
}

void stability(Outcome& o) {
    const int rc = run_cli("stability", "stability_cos.cfg", "stability_cos");
    const double rc_ratio = max_ratio(fs::path(scratch) / "stability_cos" / "stability.csv");
    const auto lat = Lattice<1>::cubic();
    const TrigPotential<1> V0(lat, {});
    StabilityOptions opt;
    const auto s = stability_envelope<1>(gaussian_bump<1>(lat, {0.0}, {1.0}, 0.1, 0.1, 16, 16), {1.0, 0.02, lat.geometry()},
                                         V0, KGrid<1>(lat, 8), SpectralBasis<1>::make(lat, 64), opt);
    double free_ratio = 0.0;
    for (const auto& x : s) free_ratio = std::max(free_ratio, x.ratio());
    o.note << "cos: exit " << rc << ", max ratio " << rc_ratio << "; free: max ratio " << free_ratio;
    o.check(rc == 0 && rc_ratio <= 1.0 + 1e-3, "cosine envelope");
    o.check(free_ratio <= 1.0 + 1e-3, "free envelope");
}

void observability(Outcome& o) {
    const int rt = run_cli("verify", "toeplitz_free.cfg", "toeplitz_free");
    const auto t = read_named(fs::path(scratch) / "toeplitz_free" / "verify.csv");
    const int rp = run_cli("verify", "pure_free.cfg", "pure_free");
    const auto p = read_named(fs::path(scratch) / "pure_free" / "verify.csv");
    auto get = [](const std::map<std::string, double>& m, const char* k) {
        const auto it = m.find(k);
        return it == m.end() ? NAN : it->second;
    };
    o.note << "toeplitz: exit " << rt << ", margin " << get(t, "margin") << ", C_GC " << get(t, "C_GC") << "; pure: exit "
           << rp << ", margin " << get(p, "margin");
    o.check(rt == 0 && get(t, "margin") >= 0.0, "toeplitz margin");
    o.check(get(t, "C_GC") >= 0.09, "C_GC");
    o.check(rp == 0 && get(p, "margin") >= 0.0, "pure margin");
}

void unitarity(Outcome& o) {
    const auto lat = Lattice<1>::cubic();
    const auto b = SpectralBasis<1>::make(lat, 64);
    const TrigPotential<1> V(lat, {{{1}, 0.1, 0.0}});
    auto u = periodized_coherent<1>({{0.1}, {0.6}, 0.05}, b);
    const double n0 = u.norm();
    FiberPropagator<1>(FiberHamiltonian<1>(b, {0.4}, V, 0.05), 1e-3).advance(u, 1000);
    const auto R = toeplitz_quantize<1>(gaussian_bump<1>(lat, {0.0}, {0.8}, 0.1, 0.2, 6, 6), KGrid<1>(lat, 8), b, 0.05);
    const double tr = std::abs(periodic_trace(evolve_density<1>(R, 1.0, V, 1e-3)) - periodic_trace(R));
    o.note << "norm drift " << std::abs(u.norm() - n0) << ", trace drift " << tr;
    o.check(std::abs(u.norm() - n0) <= 1e-9, "norm");
    o.check(tr <= 1e-9, "trace");
}

void commutators(Outcome& o) {
    const auto lat = Lattice<1>::cubic();
    const auto b = SpectralBasis<1>::make(lat, 64);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    PeriodicField<1> u(b);
    for (std::size_t i = 0; i < u.c.size(); ++i) {
        const double n = static_cast<double>(b->index(i)[0]);
        u.c[i] = b->shell(i) > b->M() - 4 ? cplx{} : cplx{gauss(rng), gauss(rng)} * std::exp(-0.15 * n * n);
    }
    u *= 1.0 / u.norm();
    const TrigPotential<1> V(lat, {{{1}, 1.0, 0.0}});
    const double rv = commutator_residual_potential<1>(V, {0.3}, 0.05, u).rel();
    const double rt = commutator_residual_theta<1>({0.23}, {1.7}, 2.0, 0.05, lat.geometry(), u).rel();
    const double d1 = diagonal_commutator_residual(theta_multiplier<1>(b, {0.17}, 2.0, lat.geometry()), potential_multiplier<1>(b, V), u);
    o.note << "potential " << rv << ", theta " << rt << ", diagonal " << d1;
    o.check(rv <= 1e-8 && rt <= 1e-8, "residual");
    o.check(d1 == 0.0, "diagonal");
}

void change_of_variable(Outcome& o) {
    const auto lat = Lattice<1>::cubic();
    const TrigPotential<1> V(lat, {{{1}, 0.1, 0.0}});
    const int nx = 128, np = 480;
    const double pmax = 8.0, hx = 1.0 / nx, hp = 2.0 * pmax / np;
    const std::vector<std::function<double(double, double)>> g = {
        [](double x, double p) { return std::exp(-p * p) * (1.0 + 0.5 * std::cos(two_pi * x)); },
        [](double x, double p) { return std::exp(-2.0 * (p - 1.0) * (p - 1.0)) * std::pow(std::sin(two_pi * x + 0.3), 2); },
        [](double x, double p) { return p * p * std::exp(-p * p / 2.0) * std::exp(std::cos(two_pi * x)); },
        [](double x, double p) { return std::exp(-std::pow(p + 0.5 * std::sin(two_pi * x), 2)); },
        [](double x, double p) { return (1.0 + p) * std::exp(-p * p) * std::cos(4.0 * pi * x) + std::exp(-p * p); },
    };
    std::vector<double> a(g.size(), 0.0), c(g.size(), 0.0);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j <= np; ++j) {
            const double x = -0.5 + i * hx, p = -pmax + j * hp;
            const auto z = flow<1>({{x}, {p}}, 1.0, V, 1e-3);
            for (std::size_t m = 0; m < g.size(); ++m) {
                a[m] += g[m](x, p) * hx * hp;
                c[m] += g[m](z.x[0], z.xi[0]) * hx * hp;
            }
        }
    double worst = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) worst = std::max(worst, std::abs(a[m] - c[m]));
    const auto l2 = Lattice<2>::cubic();
    const TrigPotential<2> V2(l2, {{{1, 0}, 0.1, 0.0}, {{1, 1}, 0.05, 0.4}});
    const PhasePoint<2> z{{0.13, -0.41}, {0.6, -1.1}};
    const auto f0 = flow<2>(z, 1.0, V2, 1e-3);
    const Vec<2> l = l2.lattice_vector({-2, 3});
    const auto f1 = flow<2>({z.x + l, z.xi}, 1.0, V2, 1e-3);
    double pp = 0.0;
    for (int i = 0; i < 2; ++i) pp = std::max({pp, std::abs(f1.x[i] - f0.x[i] - l[i]), std::abs(f1.xi[i] - f0.xi[i])});
    o.note << "max quadrature defect " << worst << ", pseudo-periodicity " << pp;
    o.check(worst <= 1e-4, "quadrature");
    o.check(pp <= 1e-10, "pseudo-periodicity");
}

void constants(Outcome& o) {
    const CellGeometry g{0.5, 0.5};
    double worst = 0.0;
    for (const auto& [T, L] : std::vector<std::pair<double, double>>{{1.0, 0.0}, {0.1, 0.0}, {1.0, 0.4 * pi * pi}, {0.5, 1.0}}) {
        double best = INFINITY;
        for (int i = 0; i <= 100000; ++i) {
            const double lam = std::exp(-8.0 + 16.0 * i / 100000.0);
            best = std::min(best, std::expm1(2.0 * (lam + L * L / lam) * T) / (lam * lam + L * L) * std::sqrt((1.0 + lam * lam) / 2.0));
        }
        best *= std::sqrt(0.5);
        worst = std::max(worst, std::abs(constant_toeplitz(g, T, L) - best) / best);
    }
    const double cp = std::abs(constant_pure(g, 0.1, 0.0) - std::expm1(0.2) / std::sqrt(2.0)) / (std::expm1(0.2) / std::sqrt(2.0));
    const double th = std::abs(hbar_threshold(0.05, 1, 0.1, 1.0) - 2.5e-5) / 2.5e-5;
    o.note << "toeplitz rel " << worst << ", pure rel " << cp << ", threshold rel " << th;
    o.check(worst <= 1e-6, "toeplitz");
    o.check(cp <= 1e-12, "pure");
    o.check(th <= 1e-15, "threshold");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 4) {
        std::cerr << "usage: blochsc_acceptance <blochsc> <source dir> <scratch dir>\n";
        return 2;
    }
    cli = argv[1];
    source = argv[2];
    scratch = argv[3];
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
        {"Bloch isometry", isometry},
        {"coherent Bloch identity", coherent_identity},
        {"Husimi normalization", husimi_normalization},
        {"Toeplitz coupling bound", toeplitz_bound},
        {"pure-state coupling bound", pure_bound},
        {"stability envelope", stability},
        {"observability verification", observability},
        {"unitarity and trace", unitarity},
        {"commutator identities", commutators},
        {"change of variable", change_of_variable},
        {"constants", constants},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.note << " [exception: " << e.what() << "]";
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.note.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
