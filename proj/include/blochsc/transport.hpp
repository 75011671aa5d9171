#pragma once

// Transport costs c_lambda(x, xi) = lambda^2 Theta(|P(x-y)|^2) + (xi + i hbar grad)^2,
// energies of explicit classical/quantum couplings, the standard deviation of a
// periodic pure state, and the Gronwall stability envelope.

#include "classical.hpp"
#include "quantum.hpp"
#include "states.hpp"

namespace blochsc {

struct CostParams {
    double lambda = 1.0;
    double hbar = 1.0;
    CellGeometry geom{};

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("cost: lambda must be positive");
        if (!(hbar > 0.0) || !std::isfinite(hbar)) throw DomainError("cost: hbar must be positive");
        if (!(geom.gamma_minus > 0.0) || !(geom.gamma_plus >= geom.gamma_minus))
            throw DomainError("cost: invalid cell geometry");
    }
};

/// eta = factor (gamma_+/gamma_-) (lambda + L^2/lambda); factor 2 is used throughout.
inline double eta(const CellGeometry& g, double lambda, double L, double factor = 2.0) {
    return factor * g.gamma_plus / g.gamma_minus * (lambda + L * L / lambda);
}

/// Theta(|P(x - y_j)|^2), or |P(x - y_j)|^2 when `squared` is set, on the position grid.
template <int D>
std::vector<double> cost_weights(const SpectralBasis<D>& basis, const Vec<D>& x, const CellGeometry& geom,
                                 bool squared = false) {
    std::vector<double> w(basis.size());
    const auto& lat = basis.lattice();
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double r = norm2<D>(lat.reduce(x - basis.point(j)));
        w[j] = squared ? r : theta(r, geom);
    }
    return w;
}

/// c_lambda(x, xi) u: grid multiplication by lambda^2 Theta plus (xi - hbar G)^2 on coefficient G.
template <int D>
PeriodicField<D> apply_cost(const CostParams& cost, const Vec<D>& x, const Vec<D>& xi, const PeriodicField<D>& u) {
    cost.validate();
    const auto& basis = *u.basis;
    const auto w = cost_weights<D>(basis, x, cost.geom);
    std::vector<cplx> s, c;
    basis.to_samples(u.c, s);
    const double l2 = cost.lambda * cost.lambda;
    for (std::size_t j = 0; j < s.size(); ++j) s[j] *= l2 * w[j];
    basis.to_coeffs(s, c);
    PeriodicField<D> out(u.basis);
    for (std::size_t i = 0; i < c.size(); ++i)
        out.c[i] = c[i] + norm2<D>(xi - cost.hbar * basis.G(i)) * u.c[i];
    return out;
}

struct CostTerms {
    double position = 0.0;  ///< lambda^2 <u, Theta u>
    double momentum = 0.0;  ///< <u, (xi + i hbar grad)^2 u>
    double total() const { return position + momentum; }
};

/// <u | c_lambda(x, xi) | u> given grid samples of u and precomputed cost weights.
template <int D>
CostTerms cost_expectation(const CostParams& cost, const std::vector<double>& weights, const Vec<D>& xi,
                           const PeriodicField<D>& u, const std::vector<cplx>& samples) {
    const auto& basis = *u.basis;
    CostTerms t;
    double s = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j) s += weights[j] * std::norm(samples[j]);
    t.position = cost.lambda * cost.lambda * s * basis.point_weight();
    double m = 0.0;
    for (std::size_t i = 0; i < u.c.size(); ++i) m += norm2<D>(xi - cost.hbar * basis.G(i)) * std::norm(u.c[i]);
    t.momentum = m;
    return t;
}

template <int D>
CostTerms cost_expectation(const CostParams& cost, const Vec<D>& x, const Vec<D>& xi, const PeriodicField<D>& u) {
    cost.validate();
    std::vector<cplx> s;
    u.basis->to_samples(u.c, s);
    return cost_expectation<D>(cost, cost_weights<D>(*u.basis, x, cost.geom), xi, u, s);
}

struct CouplingEnergy {
    double total = 0.0;
    std::vector<double> per_fiber;
    double position = 0.0;  ///< fiber average of the position part
    double momentum = 0.0;  ///< fiber average of the momentum part
    double bound = 0.0;     ///< closed-form upper bound for total
};

/// Energy of the diagonal coupling Q_k(x, xi) = f(x, xi) |percoh(x, xi - hbar k)><percoh(x, xi - hbar k)|
/// between f and its Toeplitz quantization. Bound: (1 + lambda^2) d hbar / 2.
template <int D>
CouplingEnergy coupling_energy_toeplitz(const PhaseSpaceDensity<D>& f, const CostParams& cost, const KGrid<D>& grid,
                                        const BasisPtr<D>& basis, double mass_tol = 1e-8) {
    cost.validate();
    if (std::abs(f.mass() - 1.0) > mass_tol) throw DomainError("coupling_energy_toeplitz: density is not normalized");
    std::vector<std::size_t> nodes;
    for (std::size_t j = 0; j < f.size(); ++j)
        if (f.w[j] * f.f[j] != 0.0) nodes.push_back(j);
    std::vector<std::vector<double>> weights(nodes.size());
#pragma omp parallel for schedule(static)
    for (long n = 0; n < static_cast<long>(nodes.size()); ++n)
        weights[static_cast<std::size_t>(n)] = cost_weights<D>(*basis, f.q[nodes[static_cast<std::size_t>(n)]], cost.geom);

    std::vector<CostTerms> per(grid.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(grid.size()); ++i) {
        const Vec<D> hk = cost.hbar * grid.points[static_cast<std::size_t>(i)];
        std::vector<cplx> s;
        CostTerms acc;
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            const std::size_t j = nodes[n];
            const Vec<D> xi = f.p[j] - hk;
            const auto v = periodized_coherent<D>({f.q[j], xi, cost.hbar}, basis);
            basis->to_samples(v.c, s);
            const auto t = cost_expectation<D>(cost, weights[n], xi, v, s);
            const double lam = f.w[j] * f.f[j];
            acc.position += lam * t.position;
            acc.momentum += lam * t.momentum;
        }
        per[static_cast<std::size_t>(i)] = acc;
    }
    CouplingEnergy e;
    std::vector<double> pos, mom;
    for (const auto& t : per) {
        e.per_fiber.push_back(t.total());
        pos.push_back(t.position);
        mom.push_back(t.momentum);
    }
    e.total = fiber_average(e.per_fiber);
    e.position = fiber_average(pos);
    e.momentum = fiber_average(mom);
    e.bound = (1.0 + cost.lambda * cost.lambda) * D * cost.hbar / 2.0;
    return e;
}

// ---------------------------------------------------------------------------
// Densities and cell integrals

/// |u|^2 as a field on the doubled band (exact, no aliasing).
template <int D>
PeriodicField<D> density_field(const PeriodicField<D>& u) {
    const auto big = SpectralBasis<D>::make(u.basis->lattice(), 2 * u.basis->M());
    const auto ub = rebase<D>(u, big);
    std::vector<cplx> s;
    big->to_samples(ub.c, s);
    for (auto& v : s) v = std::norm(v);
    return PeriodicField<D>::from_samples(big, s);
}

/// Cross-correlation C(z) = int_Gamma a(q) b(q + z) dq of two real fields on the same band.
template <int D>
PeriodicField<D> correlation(const PeriodicField<D>& a, const PeriodicField<D>& b) {
    PeriodicField<D> c(a.basis);
    const double v = std::sqrt(a.basis->cell_volume());
    for (std::size_t i = 0; i < c.c.size(); ++i) c.c[i] = v * b.c[i] * std::conj(a.c[i]);
    return c;
}

/// int_Gamma g(z) F(z) dz for a field F and a kernel g given in lattice
/// coordinates t of z = A t, t in [-1/2, 1/2)^D, by tensor Gauss-Legendre panels.
template <int D, class G>
double cell_integral(const PeriodicField<D>& F, G&& g, int panels = 0) {
    const auto one = SpectralBasis<D>::make(F.basis->lattice(), 1);
    if (panels <= 0) panels = F.basis->M() / 2 + 8;
    ShiftedCellQuadrature<D> Q(*F.basis, one, zero_vec<D>(), panels);
    auto vals = Q.evaluate(F);
    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] *= g(Q.node(j));
    return std::real(Q.project(vals).c[0]) * std::sqrt(F.basis->cell_volume());
}

/// int_Gamma |z|^2 F(z) dz from the exact Fourier series of |A t|^2 on [-1/2, 1/2)^D.
template <int D>
double cell_second_moment_fourier(const PeriodicField<D>& F) {
    const auto& basis = *F.basis;
    const auto& lat = basis.lattice();
    Mat<D> A{};
    for (int j = 0; j < D; ++j)
        for (int i = 0; i < D; ++i) A[i][j] = lat.a(j)[i];
    Mat<D> Gm{};  // A^T A
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
            for (int i = 0; i < D; ++i) Gm[a][b] += A[i][a] * A[i][b];
    auto I1 = [](long n) { return n == 0 ? cplx{0.0, 0.0} : cplx{0.0, (n % 2 ? -1.0 : 1.0) / (two_pi * n)}; };
    auto I2 = [](long n) {
        return n == 0 ? 1.0 / 12.0 : (n % 2 ? -1.0 : 1.0) / (2.0 * pi * pi * static_cast<double>(n * n));
    };
    // F(A t) = |Gamma|^{-1/2} sum c_n e^{2 pi i n.t}; int |At|^2 F dz = |Gamma|^{1/2} sum c_n conj(Khat_n).
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const IVec<D> n = basis.index(i);
        cplx khat{0.0, 0.0};
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) {
                cplx term{1.0, 0.0};
                for (int c = 0; c < D; ++c) {
                    if (a == b && c == a) term *= I2(n[c]);
                    else if (c == a || c == b) term *= I1(n[c]);
                    else term *= (n[c] == 0 ? 1.0 : 0.0);
                }
                khat += Gm[a][b] * term;
            }
        s += F.c[i] * std::conj(khat);
    }
    return std::real(s) * std::sqrt(basis.cell_volume());
}

// ---------------------------------------------------------------------------
// Pure states

template <int D>
void require_rank_one(const FiberedDensity<D>& R, const char* who) {
    for (const auto& f : R.fibers)
        if (f.rank() != 1) throw DomainError(std::string(who) + ": every fiber must have rank one");
}

/// c = avg_k ||u_k||^4 for R_k = |u_k><u_k| (fiber weights folded into u_k).
template <int D>
double c_bold(const FiberedDensity<D>& R) {
    require_rank_one(R, "c_bold");
    std::vector<double> v;
    for (const auto& f : R.fibers) {
        const double n2 = f.lambda[0] * f.v[0].norm2();
        v.push_back(n2 * n2);
    }
    return fiber_average(v);
}

struct StdDevParts {
    double position = 0.0;        ///< (1/2) avg_k double integral of |P(y - q)|^2 rho_k(y) rho_k(q)
    double momentum = 0.0;        ///< avg_k (||u||^2 ||-i hbar grad u||^2 - |<u, -i hbar grad u>|^2)
    double position_check = 0.0;  ///< position part from the Fourier series of |P|^2
    double momentum_check = 0.0;  ///< (1/2) avg_k sum hbar^2 |G1 - G2|^2 |c1|^2 |c2|^2
    double squared() const { return position + momentum; }
    double value() const { return std::sqrt(squared()); }
};

namespace detail {

template <int D>
PeriodicField<D> weighted_fiber(const DensityFiber<D>& f) {
    PeriodicField<D> u = f.v[0];
    const double s = std::sqrt(f.lambda[0]);
    for (auto& c : u.c) c *= s;
    return u;
}

}  // namespace detail

/// Delta^2_{Gamma,hbar}(R) for rank-one fibers, with independent evaluations of both parts.
template <int D>
StdDevParts std_dev(const FiberedDensity<D>& R) {
    require_rank_one(R, "std_dev");
    const double h = R.hbar;
    std::vector<double> pos(R.fibers.size()), mom(R.fibers.size()), posc(R.fibers.size()), momc(R.fibers.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(R.fibers.size()); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const auto u = detail::weighted_fiber(R.fibers[ii]);
        const auto rho = density_field(u);
        const auto C = correlation<D>(rho, rho);
        const auto& lat = u.basis->lattice();
        pos[ii] = 0.5 * cell_integral<D>(C, [&](const Vec<D>& t) { return norm2<D>(lat.to_cartesian(t)); });
        posc[ii] = 0.5 * cell_second_moment_fourier<D>(C);

        const auto& b = *u.basis;
        double n2 = 0.0, p2 = 0.0;
        Vec<D> p1{};
        for (std::size_t n = 0; n < u.c.size(); ++n) {
            const double w = std::norm(u.c[n]);
            const Vec<D> P = h * b.G(n);
            n2 += w;
            p2 += w * norm2<D>(P);
            p1 = p1 + w * P;
        }
        mom[ii] = n2 * p2 - norm2<D>(p1);
        double s = 0.0;
        for (std::size_t n = 0; n < u.c.size(); ++n) {
            const double wn = std::norm(u.c[n]);
            if (wn == 0.0) continue;
            for (std::size_t m = 0; m < u.c.size(); ++m)
                s += h * h * norm2<D>(b.G(n) - b.G(m)) * wn * std::norm(u.c[m]);
        }
        momc[ii] = 0.5 * s;
    }
    StdDevParts out;
    out.position = fiber_average(pos);
    out.momentum = fiber_average(mom);
    out.position_check = fiber_average(posc);
    out.momentum_check = fiber_average(momc);
    return out;
}

struct HusimiCoupling {
    CouplingEnergy energy;           ///< Theta cost; bound = d hbar c + 2 Delta^2
    double total_squared = 0.0;      ///< same coupling with |P|^2 in place of Theta
    double momentum_identity = 0.0;  ///< avg_k [ (d hbar/2)||u||^4 + 2||u||^2||Pu||^2 - 2|<Pu>|^2 ]
    double marginal_error = 0.0;     ///< max |int f_k dp - Gaussian-smoothed |u_k|^2| on the q grid
    double c = 0.0;
    StdDevParts delta;
};

/// Energy of the coupling Q_k(q, p) = f_k(q, p) |u_k><u_k| between a periodic pure
/// state and its Husimi density, at lambda = 1.
/// Position part: avg_k int_Gamma W(z) C_k(z) dz with C_k the correlation of the
/// p-marginal of f_k and |u_k|^2 (exact Fourier), W = Theta(|z|^2) or |z|^2.
/// Momentum part: direct quadrature of f_k on the Husimi grid.
template <int D>
HusimiCoupling coupling_energy_husimi(const FiberedDensity<D>& R, const CellGeometry& geom,
                                      const HusimiGrid<D>& hgrid) {
    require_rank_one(R, "coupling_energy_husimi");
    const double h = R.hbar;
    const auto data = husimi_fibers(R, hgrid);
    const std::size_t nf = R.fibers.size();
    std::vector<double> e1(nf), e1sq(nf), e2(nf), e2id(nf), merr(nf);
    const std::size_t nq = data.q_index.size();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(nf); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const auto u = detail::weighted_fiber(R.fibers[ii]);
        const auto& b = *u.basis;
        const auto& lat = b.lattice();
        const auto rho = density_field(u);
        // p-marginal of f_k: rho smoothed by (pi hbar)^{-d/2} exp(-|z|^2/hbar)
        PeriodicField<D> rhoH = rho;
        for (std::size_t n = 0; n < rhoH.c.size(); ++n)
            rhoH.c[n] *= std::exp(-0.25 * h * norm2<D>(rho.basis->G(n)));
        const auto C = correlation<D>(rhoH, rho);
        e1[ii] = cell_integral<D>(C, [&](const Vec<D>& t) { return theta(norm2<D>(lat.to_cartesian(t)), geom); });
        e1sq[ii] = cell_integral<D>(C, [&](const Vec<D>& t) { return norm2<D>(lat.to_cartesian(t)); });

        // marginal check on the Husimi q grid
        const auto& fk = data.fk[ii];
        double dpv = 1.0;
        for (int a = 0; a < D; ++a) dpv *= hgrid.dp(a);
        double err = 0.0;
        for (std::size_t iq = 0; iq < nq; ++iq) {
            double m = 0.0;
            for (std::size_t ip = 0; ip < data.momenta.size(); ++ip) m += fk[ip * nq + iq];
            const Vec<D> q = b.point(data.q_index[iq]);
            err = std::max(err, std::abs(m * dpv - std::real(rhoH(q))));
        }
        merr[ii] = err;

        // momentum moments of u
        double n2 = 0.0, p2 = 0.0;
        Vec<D> p1{};
        for (std::size_t n = 0; n < u.c.size(); ++n) {
            const double w = std::norm(u.c[n]);
            const Vec<D> P = h * b.G(n);
            n2 += w;
            p2 += w * norm2<D>(P);
            p1 = p1 + w * P;
        }
        e2id[ii] = 0.5 * D * h * n2 * n2 + 2.0 * n2 * p2 - 2.0 * norm2<D>(p1);
        // <u|(p' + i hbar grad)^2|u> = |p'|^2 n2 - 2 p'.p1 + p2 with p' = p - hbar k
        const Vec<D> hk = h * R.grid.points[ii];
        double s = 0.0;
        for (std::size_t ip = 0; ip < data.momenta.size(); ++ip) {
            const Vec<D> pp = data.momenta[ip] - hk;
            const double c2 = norm2<D>(pp) * n2 - 2.0 * dot<D>(pp, p1) + p2;
            double fsum = 0.0;
            for (std::size_t iq = 0; iq < nq; ++iq) fsum += fk[ip * nq + iq];
            s += c2 * fsum;
        }
        e2[ii] = s * data.node_weight;
    }
    HusimiCoupling out;
    for (std::size_t i = 0; i < nf; ++i) out.energy.per_fiber.push_back(e1[i] + e2[i]);
    out.energy.total = fiber_average(out.energy.per_fiber);
    out.energy.position = fiber_average(e1);
    out.energy.momentum = fiber_average(e2);
    out.total_squared = fiber_average(e1sq) + out.energy.momentum;
    out.momentum_identity = fiber_average(e2id);
    out.marginal_error = *std::max_element(merr.begin(), merr.end());
    out.c = c_bold(R);
    out.delta = std_dev(R);
    out.energy.bound = D * h * out.c + 2.0 * out.delta.squared();
    return out;
}

template <int D>
HusimiCoupling coupling_energy_husimi(const FiberedDensity<D>& R, const CellGeometry& geom) {
    return coupling_energy_husimi(R, geom, auto_husimi_grid(R));
}

// ---------------------------------------------------------------------------
// Stability

struct StabilitySample {
    double t = 0.0;
    double energy = 0.0;
    double bound = 0.0;
    double ratio() const { return bound > 0.0 ? energy / bound : (energy > 0.0 ? INFINITY : 0.0); }
};

struct StabilityOptions {
    double T = 1.0;
    int n_times = 20;  ///< samples at t = i T / n_times, i = 0..n_times
    double dt = 1e-3;
    double lip = -1.0;  ///< Lip(grad V); negative means V.lip_grad()
};

/// E(t) = avg_k sum_j w_j f_j <U_k(t) v_jk | c_lambda(Phi_{k,t}(q_j, p_j - hbar k)) | U_k(t) v_jk>,
/// v_jk = percoh(q_j, p_j - hbar k), against E(0) exp(2 eta t).
/// Quantum and classical parts advance together with the same step size.
template <int D>
std::vector<StabilitySample> stability_envelope(const PhaseSpaceDensity<D>& f, const CostParams& cost,
                                                const TrigPotential<D>& V, const KGrid<D>& grid,
                                                const BasisPtr<D>& basis, const StabilityOptions& opt) {
    cost.validate();
    if (!(opt.T > 0.0)) throw DomainError("stability: T must be positive");
    if (opt.n_times < 1) throw DomainError("stability: need at least one sample time");
    const long per = detail::step_count(opt.T / opt.n_times, opt.dt);
    const double h = opt.T / opt.n_times / static_cast<double>(per);
    const double L = opt.lip >= 0.0 ? opt.lip : V.lip_grad();
    const double et = eta(cost.geom, cost.lambda, L);

    std::vector<std::size_t> nodes;
    for (std::size_t j = 0; j < f.size(); ++j)
        if (f.w[j] * f.f[j] != 0.0) nodes.push_back(j);
    const std::size_t nn = nodes.size();

    // classical characteristics at the sample times
    std::vector<std::vector<PhasePoint<D>>> Z(static_cast<std::size_t>(opt.n_times) + 1, std::vector<PhasePoint<D>>(nn));
    for (std::size_t n = 0; n < nn; ++n) {
        PhasePoint<D> z{f.q[nodes[n]], f.p[nodes[n]]};
        Z[0][n] = z;
        for (int s = 1; s <= opt.n_times; ++s) {
            z = detail::verlet<D>(z, h, per, V, zero_vec<D>());
            Z[static_cast<std::size_t>(s)][n] = z;
        }
    }
    std::vector<std::vector<std::vector<double>>> W(Z.size(), std::vector<std::vector<double>>(nn));
    for (std::size_t s = 0; s < Z.size(); ++s)
#pragma omp parallel for schedule(static)
        for (long n = 0; n < static_cast<long>(nn); ++n)
            W[s][static_cast<std::size_t>(n)] = cost_weights<D>(*basis, Z[s][static_cast<std::size_t>(n)].x, cost.geom);

    std::vector<std::vector<double>> Ek(grid.size(), std::vector<double>(Z.size(), 0.0));
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < static_cast<long>(grid.size()); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        const Vec<D> hk = cost.hbar * grid.points[ii];
        FiberHamiltonian<D> H(basis, grid.points[ii], V, cost.hbar);
        FiberPropagator<D> P(H, h);
        std::vector<cplx> smp;
        for (std::size_t n = 0; n < nn; ++n) {
            const std::size_t j = nodes[n];
            const double lam = f.w[j] * f.f[j];
            auto v = periodized_coherent<D>({f.q[j], f.p[j] - hk, cost.hbar}, basis);
            for (std::size_t s = 0; s < Z.size(); ++s) {
                if (s > 0) P.advance(v, per);
                basis->to_samples(v.c, smp);
                Ek[ii][s] += lam * cost_expectation<D>(cost, W[s][n], Z[s][n].xi - hk, v, smp).total();
            }
        }
    }
    std::vector<StabilitySample> out;
    for (std::size_t s = 0; s < Z.size(); ++s) {
        std::vector<double> e;
        for (const auto& row : Ek) e.push_back(row[s]);
        StabilitySample smp;
        smp.t = opt.T * static_cast<double>(s) / opt.n_times;
        smp.energy = fiber_average(e);
        out.push_back(smp);
    }
    for (auto& s : out) s.bound = out[0].energy * std::exp(2.0 * et * s.t);
    return out;
}

}  // namespace blochsc
