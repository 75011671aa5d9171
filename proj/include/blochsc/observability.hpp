#pragma once

// Constants of the quantum observability inequalities and an end-to-end verifier:
//   int_0^T Tr(1_{Omega_delta} R(t) 1_{Omega_delta}) dt >= C_GC * mass_K - C * sqrt(...) / delta.

#include "transport.hpp"

namespace blochsc {

namespace detail {

// log((e^{c (lambda + L^2/lambda) T} - 1) / (lambda^2 + L^2) * sqrt((1 + lambda^2)/2)) at lambda = e^mu
inline double toeplitz_log_objective(double mu, double c, double T, double L) {
    const double lam = std::exp(mu);
    const double a = c * (lam + L * L / lam) * T;
    const double log_expm1 = a > 30.0 ? a + std::log1p(-std::exp(-a)) : std::log(std::expm1(a));
    return log_expm1 - std::log(lam * lam + L * L) + 0.5 * std::log(0.5 * (1.0 + lam * lam));
}

}  // namespace detail

struct ToeplitzConstant {
    double value = 0.0;
    double lambda = 0.0;  ///< minimizing lambda
};

/// C_T = sqrt(gamma_-/2 gamma_+) inf_lambda (e^{c(lambda + L^2/lambda)T} - 1)/(lambda^2 + L^2) sqrt((1+lambda^2)/2),
/// c = 2 gamma_+/gamma_-. Coarse scan then golden section on log lambda in [-8, 8].
inline ToeplitzConstant constant_toeplitz_full(const CellGeometry& g, double T, double L) {
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("constant_toeplitz: T must be positive");
    if (!(L >= 0.0) || !std::isfinite(L)) throw DomainError("constant_toeplitz: L must be nonnegative");
    const double c = 2.0 * g.gamma_plus / g.gamma_minus;
    auto F = [&](double mu) { return detail::toeplitz_log_objective(mu, c, T, L); };
    const double lo = -8.0, hi = 8.0;
    const int n = 1600;
    const double h = (hi - lo) / n;
    int best = 0;
    double fb = F(lo);
    for (int i = 1; i <= n; ++i) {
        const double v = F(lo + h * i);
        if (v < fb) {
            fb = v;
            best = i;
        }
    }
    double a = lo + h * std::max(best - 1, 0), b = lo + h * std::min(best + 1, n);
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = F(x1), f2 = F(x2);
    while (b - a > 1e-8) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = F(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = F(x2);
        }
    }
    double mu = 0.5 * (a + b);
    double fm = F(mu);
    if (fb < fm) {
        mu = lo + h * best;
        fm = fb;
    }
    return {std::sqrt(1.0 / c) * std::exp(fm), std::exp(mu)};
}

inline double constant_toeplitz(const CellGeometry& g, double T, double L) { return constant_toeplitz_full(g, T, L).value; }

/// C_pure = sqrt(gamma_-/2 gamma_+) (e^{(2 gamma_+/gamma_-)(1 + L^2) T} - 1)/(1 + L^2).
inline double constant_pure(const CellGeometry& g, double T, double L) {
    if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("constant_pure: T must be nonnegative");
    const double c = 2.0 * g.gamma_plus / g.gamma_minus;
    return std::sqrt(g.gamma_minus / (2.0 * g.gamma_plus)) * std::expm1(c * (1.0 + L * L) * T) / (1.0 + L * L);
}

/// (delta^2 / d) C_GC^2 / C^2: below this hbar the penalty is smaller than the classical term.
inline double hbar_threshold(double delta, int d, double C_gc, double C) {
    if (C_gc <= 0.0) return 0.0;
    return (delta * delta / d) * (C_gc * C_gc) / (C * C);
}

/// sqrt(c) (e^{eta T} - 1)/(eta delta lambda) * E, the penalty as assembled from the
/// stability estimate at a given lambda and initial coupling bound E.
inline double penalty_chain(const CellGeometry& g, double T, double L, double lambda, double delta, double E) {
    const double c = 2.0 * g.gamma_plus / g.gamma_minus;
    const double et = eta(g, lambda, L);
    return std::sqrt(c) * std::expm1(et * T) / (et * delta * lambda) * E;
}

template <int D>
struct ObservabilityScenario {
    double T = 1.0;
    std::vector<PhaseBox<D>> K;
    std::vector<Box<D>> omega;
    double delta = 0.05;
    TrigPotential<D> V;
    double hbar = 1e-3;
    int M = 0;            ///< plane-wave order of the fiber basis
    int nk = 8;           ///< k points per axis
    int time_steps = 200; ///< trapezoid nodes on [0, T]
    double dt = 1e-3;     ///< propagation step when V != 0
    GcOptions gc{};
    double budget_fraction = 5e-3;

    void validate() const {
        if (!(T > 0.0)) throw DomainError("scenario: T must be positive");
        if (!(delta > 0.0)) throw DomainError("scenario: delta must be positive");
        if (!(hbar > 0.0)) throw DomainError("scenario: hbar must be positive");
        if (K.empty()) throw DomainError("scenario: K is empty");
        if (time_steps < 1) throw DomainError("scenario: need at least one time step");
        if (M < 1 || nk < 1) throw DomainError("scenario: invalid discretization");
    }
};

struct TheoremReport {
    double lhs = 0.0;
    double mass_K = 0.0;
    double classical_term = 0.0;
    double penalty = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double budget = 0.0;
    bool pass = false;
    double C_gc = 0.0;
    bool gc_violated = false;
    double C = 0.0;        ///< C_Toeplitz or C_pure
    double lambda = 0.0;   ///< lambda used in the chain (optimal for Toeplitz, 1 for pure)
    double lip = 0.0;
    double eta = 0.0;
    double coupling_bound = 0.0;  ///< (1+lambda^2) d hbar/2 or d hbar c + 2 Delta^2 (squared energy)
    double delta_std = 0.0;       ///< Delta_{Gamma,hbar} (pure case)
    double c_bold = 0.0;
    double threshold = 0.0;
    bool above_threshold = false;
    double chain = 0.0;           ///< penalty reassembled from the stability chain
    std::string kind;
};

template <int D>
struct ObservationSeries {
    std::vector<double> t;
    std::vector<double> value;  ///< avg_k Tr(1_Omega R_k(t) 1_Omega)
    double integral = 0.0;      ///< trapezoid rule
};

/// Observation of R(t) on each region at the uniform time grid t_i = i T / steps,
/// with every fiber evolved incrementally.
template <int D>
std::vector<ObservationSeries<D>> observe_series(const FiberedDensity<D>& R, const std::vector<Region<D>>& regions,
                                                 const TrigPotential<D>& V, double T, int steps, double dt) {
    if (steps < 1) throw DomainError("observe_series: need at least one time step");
    const auto& basis = *R.basis;
    const std::size_t nr = regions.size();
    std::vector<std::vector<std::size_t>> masks(nr);
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t j = 0; j < basis.size(); ++j)
            if (regions[r].contains(basis.point(j))) masks[r].push_back(j);
    const double hstep = T / steps;
    const long per = V.empty() ? 1 : detail::step_count(hstep, dt);
    const double h = hstep / static_cast<double>(per);
    const std::size_t nt = static_cast<std::size_t>(steps) + 1;
    // obs[fiber][region * nt + step]
    std::vector<std::vector<double>> obs(R.fibers.size(), std::vector<double>(nr * nt, 0.0));
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(R.fibers.size()); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        FiberHamiltonian<D> H(R.basis, R.grid.points[ii], V, R.hbar);
        FiberPropagator<D> P(H, h);
        std::vector<cplx> s;
        for (std::size_t m = 0; m < R.fibers[ii].rank(); ++m) {
            auto v = R.fibers[ii].v[m];
            const double lam = R.fibers[ii].lambda[m];
            for (std::size_t st = 0; st < nt; ++st) {
                if (st > 0) P.advance(v, per);
                basis.to_samples(v.c, s);
                for (std::size_t r = 0; r < nr; ++r) {
                    double acc = 0.0;
                    for (std::size_t j : masks[r]) acc += std::norm(s[j]);
                    obs[ii][r * nt + st] += lam * acc * basis.point_weight();
                }
            }
        }
    }
    std::vector<ObservationSeries<D>> out(nr);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t st = 0; st < nt; ++st) {
            std::vector<double> v;
            for (const auto& row : obs) v.push_back(row[r * nt + st]);
            out[r].t.push_back(hstep * static_cast<double>(st));
            out[r].value.push_back(fiber_average(v));
        }
        for (std::size_t st = 0; st < nt; ++st)
            out[r].integral += (st == 0 || st + 1 == nt ? 0.5 : 1.0) * hstep * out[r].value[st];
    }
    return out;
}

template <int D>
ObservationSeries<D> observe_series(const FiberedDensity<D>& R, const Region<D>& omega, const TrigPotential<D>& V,
                                    double T, int steps, double dt) {
    return observe_series<D>(R, std::vector<Region<D>>{omega}, V, T, steps, dt).front();
}

namespace detail {

template <int D>
void finish_report(TheoremReport& r, const ObservabilityScenario<D>& sc, double lhs) {
    r.lhs = lhs;
    r.rhs = r.classical_term - r.penalty;
    r.margin = r.lhs - r.rhs;
    r.budget = sc.budget_fraction * std::abs(r.classical_term);
    r.pass = r.margin >= -r.budget;
    r.threshold = hbar_threshold(sc.delta, D, r.C_gc, r.C);
    r.above_threshold = sc.hbar >= r.threshold;
}

template <int D>
GcEstimate<D> scenario_gc(const ObservabilityScenario<D>& sc, const Lattice<D>& lat) {
    return gc_constant<D>(sc.T, sc.K, Region<D>(lat, sc.omega, 0.0), sc.V, sc.gc);
}

}  // namespace detail

/// Toeplitz case: R^in = T_L[f^in].
template <int D>
TheoremReport verify_toeplitz_theorem(const ObservabilityScenario<D>& sc, const PhaseSpaceDensity<D>& f_in,
                                      ObservationSeries<D>* series = nullptr) {
    sc.validate();
    const auto& lat = sc.V.lattice();
    const auto geom = lat.geometry();
    TheoremReport r;
    r.kind = "toeplitz";
    const auto gc = detail::scenario_gc(sc, lat);
    r.C_gc = gc.value;
    r.gc_violated = gc.violated;
    r.mass_K = f_in.mass_in(sc.K);
    r.classical_term = r.C_gc * r.mass_K;
    r.lip = sc.V.lip_grad();
    const auto ct = constant_toeplitz_full(geom, sc.T, r.lip);
    r.C = ct.value;
    r.lambda = ct.lambda;
    r.eta = eta(geom, r.lambda, r.lip);
    r.coupling_bound = (1.0 + r.lambda * r.lambda) * D * sc.hbar / 2.0;
    r.penalty = r.C * std::sqrt(D * sc.hbar) / sc.delta;
    r.chain = penalty_chain(geom, sc.T, r.lip, r.lambda, sc.delta, std::sqrt(r.coupling_bound));

    const auto basis = SpectralBasis<D>::make(lat, sc.M);
    const KGrid<D> grid(lat, sc.nk);
    const auto R = toeplitz_quantize(f_in, grid, basis, sc.hbar);
    const auto obs = observe_series(R, Region<D>(lat, sc.omega, 0.0).dilated(sc.delta), sc.V, sc.T, sc.time_steps, sc.dt);
    if (series) *series = obs;
    detail::finish_report(r, sc, obs.integral);
    return r;
}

/// Pure-state case: R^in_k = |u_k><u_k|, classical datum its Husimi density.
template <int D>
TheoremReport verify_pure_theorem(const ObservabilityScenario<D>& sc, const FiberedDensity<D>& R_in,
                                  ObservationSeries<D>* series = nullptr) {
    sc.validate();
    require_rank_one(R_in, "verify_pure_theorem");
    const auto& lat = sc.V.lattice();
    const auto geom = lat.geometry();
    TheoremReport r;
    r.kind = "pure";
    const auto gc = detail::scenario_gc(sc, lat);
    r.C_gc = gc.value;
    r.gc_violated = gc.violated;
    r.mass_K = husimi(R_in).mass_in(sc.K);
    r.classical_term = r.C_gc * r.mass_K;
    r.lip = sc.V.lip_grad();
    r.C = constant_pure(geom, sc.T, r.lip);
    r.lambda = 1.0;
    r.eta = eta(geom, 1.0, r.lip);
    r.c_bold = c_bold(R_in);
    const auto sd = std_dev(R_in);
    r.delta_std = sd.value();
    r.coupling_bound = D * sc.hbar * r.c_bold + 2.0 * sd.squared();
    r.penalty = r.C * std::sqrt(r.coupling_bound) / sc.delta;
    r.chain = penalty_chain(geom, sc.T, r.lip, 1.0, sc.delta, std::sqrt(r.coupling_bound));

    const auto obs = observe_series(R_in, Region<D>(lat, sc.omega, 0.0).dilated(sc.delta), sc.V, sc.T, sc.time_steps, sc.dt);
    if (series) *series = obs;
    detail::finish_report(r, sc, obs.integral);
    return r;
}

/// Rank-one fibers u_k = percoh(q0, p0 - hbar k) of a coherent state.
template <int D>
FiberedDensity<D> coherent_family(const Vec<D>& q0, const Vec<D>& p0, double hbar, const KGrid<D>& grid,
                                  const BasisPtr<D>& basis) {
    FiberedDensity<D> R{basis, grid, hbar, {}};
    for (const auto& k : grid.points)
        R.fibers.push_back(DensityFiber<D>{{1.0}, {periodized_coherent<D>({q0, p0 - hbar * k, hbar}, basis)}});
    return R;
}

}  // namespace blochsc
