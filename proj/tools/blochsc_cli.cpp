// Command-line runner: parses a scenario file and dispatches subcommands.
// Exit codes: 0 success, 1 internal error, 2 config parse error, 3 invalid
// config or precondition, 4 numerical accuracy failure (or failed check).

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "blochsc/blochsc.hpp"

namespace fs = std::filesystem;
using namespace blochsc;

namespace {

struct Context {
    config::ExperimentConfig cfg;
    fs::path out;
    double tol_scale = 1.0;
};

template <int D>
Vec<D> to_vec(const std::vector<double>& v) {
    Vec<D> r{};
    for (int a = 0; a < D; ++a) r[a] = v[static_cast<std::size_t>(a)];
    return r;
}

template <int D>
Lattice<D> make_lattice(const config::ExperimentConfig& c) {
    std::array<Vec<D>, D> b{};
    for (int j = 0; j < D; ++j) b[j] = to_vec<D>(c.basis[static_cast<std::size_t>(j)]);
    return Lattice<D>(b);
}

template <int D>
TrigPotential<D> make_potential(const Lattice<D>& lat, const config::ExperimentConfig& c) {
    std::vector<TrigTerm<D>> terms;
    for (const auto& t : c.terms) {
        TrigTerm<D> tt;
        for (int a = 0; a < D; ++a) tt.n[a] = t.n[static_cast<std::size_t>(a)];
        tt.amplitude = t.amplitude;
        tt.phase = t.phase;
        terms.push_back(tt);
    }
    return TrigPotential<D>(lat, terms);
}

template <int D>
std::vector<Box<D>> make_omega(const config::ExperimentConfig& c) {
    std::vector<Box<D>> out;
    for (const auto& b : c.omega) out.push_back({to_vec<D>(b.lo), to_vec<D>(b.hi)});
    return out;
}

template <int D>
std::vector<PhaseBox<D>> make_K(const config::ExperimentConfig& c) {
    std::vector<PhaseBox<D>> out;
    for (const auto& b : c.K)
        out.push_back({{to_vec<D>(b.x.lo), to_vec<D>(b.x.hi)}, {to_vec<D>(b.xi.lo), to_vec<D>(b.xi.hi)}});
    return out;
}

template <int D>
PhaseSpaceDensity<D> make_bump(const Lattice<D>& lat, const config::ExperimentConfig& c) {
    return gaussian_bump<D>(lat, to_vec<D>(c.q0), to_vec<D>(c.p0), c.sigma_q, c.sigma_p, c.Nq, c.Np);
}

template <int D>
FiberedDensity<D> make_initial(const Lattice<D>& lat, const config::ExperimentConfig& c, const BasisPtr<D>& basis,
                               const KGrid<D>& grid) {
    if (c.kind == "toeplitz") return toeplitz_quantize(make_bump<D>(lat, c), grid, basis, *c.hbar);
    return coherent_family<D>(to_vec<D>(c.q0), to_vec<D>(c.p0), *c.hbar, grid, basis);
}

template <int D>
HusimiGrid<D> make_husimi_grid(const FiberedDensity<D>& R, const config::ExperimentConfig& c) {
    if (c.p_max <= 0.0) return auto_husimi_grid(R);
    HusimiGrid<D> g;
    const Vec<D> p0 = to_vec<D>(c.p0);
    for (int a = 0; a < D; ++a) {
        g.p_lo[a] = p0[a] - c.p_max;
        g.p_hi[a] = p0[a] + c.p_max;
    }
    g.np = std::max(2, static_cast<int>(std::ceil(2.0 * c.p_max / (0.4 * std::sqrt(*c.hbar)))));
    return g;
}

template <int D>
ObservabilityScenario<D> make_scenario(const Lattice<D>& lat, const Context& ctx) {
    const auto& c = ctx.cfg;
    ObservabilityScenario<D> sc;
    sc.T = *c.T;
    sc.K = make_K<D>(c);
    sc.omega = make_omega<D>(c);
    sc.delta = *c.delta;
    sc.V = make_potential<D>(lat, c);
    sc.hbar = *c.hbar;
    sc.M = *c.M;
    sc.nk = c.Nk;
    sc.time_steps = c.time_steps;
    sc.dt = c.dt;
    sc.gc.per_axis = c.gc_per_axis;
    sc.gc.quasi = c.gc_quasi;
    sc.gc.steps = c.gc_steps;
    sc.gc.seed = c.hash;
    sc.budget_fraction = 5e-3 * ctx.tol_scale;
    return sc;
}

void write_named(const fs::path& path, std::uint64_t hash, const std::vector<std::pair<std::string, double>>& rows) {
    CsvWriter w(path, hash, {"name", "value"});
    for (const auto& [k, v] : rows) w.row({k, format_number(v)});
}

// ---------------------------------------------------------------------------

template <int D>
int cmd_bloch_check(const Context& ctx) {
    const auto& c = ctx.cfg;
    const auto lat = make_lattice<D>(c);
    const double h = *c.hbar;
    const auto basis = SpectralBasis<D>::make(lat, *c.M);
    const KGrid<D> grid(lat, c.Nk);
    const auto geom = lat.geometry();
    const int L = c.L_cut > 0 ? c.L_cut : translate_window_for(h, geom.gamma_minus, 1e-16);
    std::mt19937_64 rng(c.hash);
    // keep momenta well inside the band: |p|/hbar + 9/sqrt(hbar) below the smallest |G| at order M
    double gmin = INFINITY;
    for (int i = 0; i < D; ++i) gmin = std::min(gmin, norm<D>(lat.b(i)));
    const double p_max = std::max(0.0, h * (gmin * (*c.M) - 9.0 / std::sqrt(h) - 0.5 * gmin * D)) / std::sqrt(double(D));

    CsvWriter w(ctx.out / "bloch_check.csv", c.hash, {"check", "case", "error", "tolerance", "pass"});
    bool ok = true;
    const double tol_iso = 1e-10 * ctx.tol_scale, tol_coh = 1e-9 * ctx.tol_scale;
    for (int n = 0; n < 10; ++n) {
        const auto u = random_packet<D>(rng, lat, h, p_max);
        const auto F = bloch_transform<D>(u, grid, basis, L);
        const double ref = u.norm2();
        const double err = std::abs(F.norm2() - ref) / ref;
        ok = ok && err <= tol_iso;
        w.row({"isometry", std::to_string(n), format_number(err), format_number(tol_iso), err <= tol_iso ? "1" : "0"});
    }
    std::uniform_real_distribution<double> ut(-0.5, 0.5), up(-p_max, p_max);
    for (int n = 0; n < 5; ++n) {
        Vec<D> t{}, p{};
        for (int a = 0; a < D; ++a) {
            t[a] = ut(rng);
            p[a] = up(rng);
        }
        const CoherentParams<D> s{lat.to_cartesian(t), p, h};
        const auto F = bloch_transform<D>([&](const Vec<D>& y) { return coherent_state<D>(s, y); }, grid, basis, L);
        double err = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto ref = periodized_coherent<D>({s.q, s.p - h * grid.points[i], h}, basis);
            err = std::max(err, max_abs_diff(F.fibers[i], ref));
        }
        ok = ok && err <= tol_coh;
        w.row({"coherent", std::to_string(n), format_number(err), format_number(tol_coh), err <= tol_coh ? "1" : "0"});
    }
    std::cout << "bloch-check: " << (ok ? "pass" : "FAIL") << '\n';
    return ok ? 0 : 4;
}

template <int D>
int cmd_evolve(const Context& ctx) {
    const auto& c = ctx.cfg;
    const auto lat = make_lattice<D>(c);
    const auto basis = SpectralBasis<D>::make(lat, *c.M);
    const KGrid<D> grid(lat, c.Nk);
    const auto V = make_potential<D>(lat, c);
    const auto R = make_initial<D>(lat, c, basis, grid);
    const Region<D> omega(lat, make_omega<D>(c), 0.0);
    const auto series = observe_series<D>(R, {Region<D>::full(lat), omega, omega.dilated(*c.delta)}, V, *c.T,
                                          c.time_steps, c.dt);
    CsvWriter w(ctx.out / "evolve.csv", c.hash, {"t", "trace", "observe_omega", "observe_omega_delta"});
    for (std::size_t i = 0; i < series[0].t.size(); ++i)
        w.row({series[0].t[i], series[0].value[i], series[1].value[i], series[2].value[i]});
    std::cout << "evolve: trace drift " << format_number(std::abs(series[0].value.back() - series[0].value.front()))
              << ", integral over Omega_delta " << format_number(series[2].integral) << '\n';
    return 0;
}

template <int D>
int cmd_husimi(const Context& ctx) {
    const auto& c = ctx.cfg;
    const auto lat = make_lattice<D>(c);
    const auto basis = SpectralBasis<D>::make(lat, *c.M);
    const KGrid<D> grid(lat, c.Nk);
    const auto R = make_initial<D>(lat, c, basis, grid);
    const auto W = husimi(R, make_husimi_grid<D>(R, c));
    std::vector<std::string> cols;
    for (int a = 0; a < D; ++a) cols.push_back("q" + std::to_string(a + 1));
    for (int a = 0; a < D; ++a) cols.push_back("p" + std::to_string(a + 1));
    cols.push_back("weight");
    cols.push_back("value");
    CsvWriter w(ctx.out / "husimi.csv", c.hash, cols);
    for (std::size_t j = 0; j < W.size(); ++j) {
        std::vector<double> row;
        for (int a = 0; a < D; ++a) row.push_back(W.q[j][a]);
        for (int a = 0; a < D; ++a) row.push_back(W.p[j][a]);
        row.push_back(W.w[j]);
        row.push_back(W.f[j]);
        w.row(row);
    }
    std::cout << "husimi: " << W.size() << " nodes, mass " << format_number(W.mass()) << '\n';
    return 0;
}

template <int D>
int cmd_metric(const Context& ctx) {
    const auto& c = ctx.cfg;
    const auto lat = make_lattice<D>(c);
    const auto geom = lat.geometry();
    const auto basis = SpectralBasis<D>::make(lat, *c.M);
    const KGrid<D> grid(lat, c.Nk);
    std::vector<std::pair<std::string, double>> rows;
    if (c.kind == "toeplitz") {
        const auto f = make_bump<D>(lat, c);
        const auto e = coupling_energy_toeplitz<D>(f, {c.lambda, *c.hbar, geom}, grid, basis);
        rows = {{"lambda", c.lambda},     {"energy", e.total},  {"position", e.position},
                {"momentum", e.momentum}, {"bound", e.bound},   {"ratio", e.total / e.bound}};
    } else {
        const auto R = make_initial<D>(lat, c, basis, grid);
        const auto e = coupling_energy_husimi<D>(R, geom, make_husimi_grid<D>(R, c));
        rows = {{"energy", e.energy.total},
                {"energy_squared_distance", e.total_squared},
                {"position", e.energy.position},
                {"momentum", e.energy.momentum},
                {"momentum_identity", e.momentum_identity},
                {"marginal_error", e.marginal_error},
                {"c_bold", e.c},
                {"delta_squared", e.delta.squared()},
                {"bound", e.energy.bound},
                {"ratio", e.energy.total / e.energy.bound}};
    }
    write_named(ctx.out / "metric.csv", c.hash, rows);
    for (const auto& [k, v] : rows) std::cout << k << " = " << format_number(v) << '\n';
    return 0;
}

template <int D>
int cmd_stability(const Context& ctx) {
    const auto& c = ctx.cfg;
    if (c.kind != "toeplitz") throw config::ValidationError("initial.kind", "stability needs a toeplitz datum");
    const auto lat = make_lattice<D>(c);
    const auto basis = SpectralBasis<D>::make(lat, *c.M);
    const KGrid<D> grid(lat, c.Nk);
    const auto V = make_potential<D>(lat, c);
    const auto f = make_bump<D>(lat, c);
    StabilityOptions opt;
    opt.T = *c.T;
    opt.n_times = c.stability_times;
    opt.dt = c.dt;
    const auto s = stability_envelope<D>(f, {c.lambda, *c.hbar, lat.geometry()}, V, grid, basis, opt);
    CsvWriter w(ctx.out / "stability.csv", c.hash, {"t", "energy", "bound", "ratio"});
    const double tol = 1e-3 * ctx.tol_scale;
    bool ok = true;
    for (const auto& x : s) {
        w.row({x.t, x.energy, x.bound, x.ratio()});
        ok = ok && x.ratio() <= 1.0 + tol;
    }
    std::cout << "stability: envelope " << (ok ? "holds" : "VIOLATED") << '\n';
    return ok ? 0 : 4;
}

template <int D>
int cmd_constants(const Context& ctx) {
    const auto& c = ctx.cfg;
    const auto lat = make_lattice<D>(c);
    const auto geom = lat.geometry();
    const auto sc = make_scenario<D>(lat, ctx);
    const double L = sc.V.lip_grad();
    const auto ct = constant_toeplitz_full(geom, sc.T, L);
    const double cp = constant_pure(geom, sc.T, L);
    const auto gc = gc_constant<D>(sc.T, sc.K, Region<D>(lat, sc.omega, 0.0), sc.V, sc.gc);
    const std::vector<std::pair<std::string, double>> rows = {
        {"gamma_minus", geom.gamma_minus},
        {"gamma_plus", geom.gamma_plus},
        {"lip_grad_V", L},
        {"eta_toeplitz", eta(geom, ct.lambda, L)},
        {"eta_pure", eta(geom, 1.0, L)},
        {"C_GC", gc.value},
        {"C_GC_samples", static_cast<double>(gc.samples)},
        {"C_toeplitz", ct.value},
        {"lambda_opt", ct.lambda},
        {"C_pure", cp},
        {"hbar_threshold_toeplitz", hbar_threshold(sc.delta, D, gc.value, ct.value)},
        {"hbar_threshold_pure", hbar_threshold(sc.delta, D, gc.value, cp)}};
    write_named(ctx.out / "constants.csv", c.hash, rows);
    for (const auto& [k, v] : rows) std::cout << k << " = " << format_number(v) << '\n';
    return 0;
}

template <int D>
int cmd_verify(const Context& ctx) {
    const auto& c = ctx.cfg;
    const auto lat = make_lattice<D>(c);
    const auto sc = make_scenario<D>(lat, ctx);
    const auto basis = SpectralBasis<D>::make(lat, sc.M);
    const KGrid<D> grid(lat, sc.nk);
    ObservationSeries<D> series;
    TheoremReport r;
    if (c.kind == "toeplitz") r = verify_toeplitz_theorem<D>(sc, make_bump<D>(lat, c), &series);
    else r = verify_pure_theorem<D>(sc, make_initial<D>(lat, c, basis, grid), &series);

    const std::vector<std::pair<std::string, double>> rows = {
        {"lhs", r.lhs},
        {"mass_K", r.mass_K},
        {"C_GC", r.C_gc},
        {"classical_term", r.classical_term},
        {r.kind == "toeplitz" ? "C_toeplitz" : "C_pure", r.C},
        {"lambda", r.lambda},
        {"lip_grad_V", r.lip},
        {"eta", r.eta},
        {"coupling_bound", r.coupling_bound},
        {"delta_std", r.delta_std},
        {"c_bold", r.c_bold},
        {"penalty", r.penalty},
        {"penalty_chain", r.chain},
        {"rhs", r.rhs},
        {"margin", r.margin},
        {"budget", r.budget},
        {"hbar_threshold", r.threshold},
        {"pass", r.pass ? 1.0 : 0.0}};
    write_named(ctx.out / "verify.csv", c.hash, rows);
    CsvWriter w(ctx.out / "verify_series.csv", c.hash, {"t", "observe_omega_delta"});
    for (std::size_t i = 0; i < series.t.size(); ++i) w.row({series.t[i], series.value[i]});

    std::cout << "verify (" << r.kind << ")\n";
    for (const auto& [k, v] : rows) std::cout << "  " << k << " = " << format_number(v) << '\n';
    if (r.gc_violated) std::cout << "  warning: sampled geometric control fails (C_GC = 0)\n";
    if (r.above_threshold)
        std::cout << "  note: hbar exceeds the threshold " << format_number(r.threshold)
                  << "; the inequality holds but its right-hand side is negative\n";
    std::cout << (r.pass ? "PASS" : "FAIL") << ": margin " << format_number(r.margin) << " vs budget -"
              << format_number(r.budget) << '\n';
    return r.pass ? 0 : 4;
}

template <int D>
int dispatch(const std::string& cmd, const Context& ctx) {
    if (cmd == "bloch-check") return cmd_bloch_check<D>(ctx);
    if (cmd == "evolve") return cmd_evolve<D>(ctx);
    if (cmd == "husimi") return cmd_husimi<D>(ctx);
    if (cmd == "metric") return cmd_metric<D>(ctx);
    if (cmd == "stability") return cmd_stability<D>(ctx);
    if (cmd == "constants") return cmd_constants<D>(ctx);
    return cmd_verify<D>(ctx);
}

config::Needs needs_for(const std::string& cmd) {
    config::Needs n;
    n.initial = cmd != "constants" && cmd != "bloch-check";
    n.scenario = cmd == "constants" || cmd == "verify" || cmd == "evolve";
    return n;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blochsc: Bloch-periodic semiclassical observability laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir;
    int threads = 0;
    double tol_scale = 1.0;
    app.add_option("--config", config_path, "scenario file")->envname("BLOCHSC_CONFIG");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)")->envname("BLOCHSC_OUT");
    app.add_option("--threads", threads, "OpenMP threads (0: runtime default)")->envname("BLOCHSC_THREADS");
    app.add_option("--tolerance-scale", tol_scale, "multiplies every check tolerance and the verify budget")
        ->envname("BLOCHSC_TOLERANCE_SCALE");
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"bloch-check", "Bloch isometry and coherent-state identity checks"},
        {"evolve", "evolve the initial density and record observations"},
        {"husimi", "export the Husimi density of the initial state"},
        {"metric", "coupling energies and their closed-form bounds"},
        {"stability", "stability energy against its exponential envelope"},
        {"constants", "all constants of the scenario"},
        {"verify", "observability report (toeplitz or pure per config)"}};
    for (const auto& [name, desc] : subs) app.add_subcommand(name, desc);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    std::string cmd;
    for (const auto* s : app.get_subcommands()) cmd = s->get_name();

    try {
        if (config_path.empty()) throw config::ValidationError("--config", "missing");
        if (!(tol_scale > 0.0)) throw config::ValidationError("--tolerance-scale", "must be positive");
        if (threads < 0) throw config::ValidationError("--threads", "must be nonnegative");
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
        Context ctx;
        ctx.cfg = config::load(config_path);
        config::validate(ctx.cfg, needs_for(cmd));
        ctx.tol_scale = tol_scale;
        ctx.out = out_dir.empty() ? fs::path(ctx.cfg.out_dir) : fs::path(out_dir);
        fs::create_directories(ctx.out);
        switch (ctx.cfg.dim) {
            case 1: return dispatch<1>(cmd, ctx);
            case 2: return dispatch<2>(cmd, ctx);
            default: return dispatch<3>(cmd, ctx);
        }
    } catch (const config::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const config::ValidationError& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 3;
    } catch (const AccuracyError& e) {
        std::cerr << "accuracy error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
