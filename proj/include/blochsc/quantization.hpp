#pragma once

// Phase-space densities, low-rank fibered density operators, the periodic
// trace, L-periodic Toeplitz quantization and the L-periodic Husimi transform.

#include <optional>

#include "region.hpp"
#include "states.hpp"

namespace blochsc {

/// Quadrature representation of f in P_L: nodes (q_j, p_j), weights w_j, values f_j.
template <int D>
struct PhaseSpaceDensity {
    std::vector<Vec<D>> q;
    std::vector<Vec<D>> p;
    std::vector<double> w;
    std::vector<double> f;
    int nq = 0;             ///< position nodes per axis (0 when unstructured)
    int np = 0;             ///< momentum nodes per axis
    Vec<D> p_lo{}, p_hi{};  ///< momentum window

    std::size_t size() const { return q.size(); }

    void push(const Vec<D>& qq, const Vec<D>& pp, double ww, double ff) {
        q.push_back(qq);
        p.push_back(pp);
        w.push_back(ww);
        f.push_back(ff);
    }

    double mass() const {
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) s += w[j] * f[j];
        return s;
    }

    /// Mass of the nodes lying in the phase-space box union K.
    double mass_in(const std::vector<PhaseBox<D>>& K) const {
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j)
            if (in_any<D>(K, q[j], p[j])) s += w[j] * f[j];
        return s;
    }

    double integrate(const std::function<double(const Vec<D>&, const Vec<D>&)>& g) const {
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) s += w[j] * f[j] * g(q[j], p[j]);
        return s;
    }
};

template <int D>
PhaseSpaceDensity<D> point_mass(const Vec<D>& q0, const Vec<D>& p0) {
    PhaseSpaceDensity<D> f;
    f.push(q0, p0, 1.0, 1.0);
    f.nq = f.np = 1;
    f.p_lo = f.p_hi = p0;
    return f;
}

/// Gaussian bump, periodized in q, on an nq^D x np^D tensor grid: cell-centred
/// nodes on Gamma and on the momentum box p0 +- width*sigma_p. Values are
/// normalized so that the discrete mass is exactly 1.
template <int D>
PhaseSpaceDensity<D> gaussian_bump(const Lattice<D>& lat, const Vec<D>& q0, const Vec<D>& p0, double sigma_q,
                                   double sigma_p, int nq, int np, double width = 6.0) {
    if (!(sigma_q > 0.0) || !(sigma_p > 0.0)) throw DomainError("gaussian_bump: widths must be positive");
    if (nq < 1 || np < 1) throw DomainError("gaussian_bump: empty grid");
    PhaseSpaceDensity<D> out;
    out.nq = nq;
    out.np = np;
    for (int i = 0; i < D; ++i) {
        out.p_lo[i] = p0[i] - width * sigma_p;
        out.p_hi[i] = p0[i] + width * sigma_p;
    }
    const double dp = 2.0 * width * sigma_p / np;
    const double wq = lat.cell_volume() / static_cast<double>(ipow(static_cast<std::size_t>(nq), D));
    const double w = wq * std::pow(dp, D);
    std::vector<Vec<D>> qs, ps;
    for_each_index<D>(static_cast<std::size_t>(nq), [&](std::size_t, const auto& idx) {
        Vec<D> t{};
        for (int a = 0; a < D; ++a) t[a] = (static_cast<double>(idx[a]) + 0.5) / nq - 0.5;
        qs.push_back(lat.to_cartesian(t));
    });
    for_each_index<D>(static_cast<std::size_t>(np), [&](std::size_t, const auto& idx) {
        Vec<D> p{};
        for (int a = 0; a < D; ++a) p[a] = out.p_lo[a] + (static_cast<double>(idx[a]) + 0.5) * dp;
        ps.push_back(p);
    });
    const int L = std::max(2, static_cast<int>(std::ceil(8.0 * sigma_q / lat.geometry().gamma_minus)));
    std::vector<Vec<D>> shifts;
    for_each_index<D>(static_cast<std::size_t>(2 * L + 1), [&](std::size_t, const auto& idx) {
        IVec<D> n{};
        for (int a = 0; a < D; ++a) n[a] = static_cast<long>(idx[a]) - L;
        shifts.push_back(lat.lattice_vector(n));
    });
    double total = 0.0;
    for (const auto& q : qs) {
        double gq = 0.0;
        for (const auto& l : shifts) gq += std::exp(-norm2<D>(q - q0 + l) / (2.0 * sigma_q * sigma_q));
        for (const auto& p : ps) {
            const double v = gq * std::exp(-norm2<D>(p - p0) / (2.0 * sigma_p * sigma_p));
            out.push(q, p, w, v);
            total += w * v;
        }
    }
    for (auto& v : out.f) v /= total;
    return out;
}

/// Low-rank fiber R_k = sum_m lambda_m |v_m><v_m|.
template <int D>
struct DensityFiber {
    std::vector<double> lambda;
    std::vector<PeriodicField<D>> v;

    std::size_t rank() const { return v.size(); }
    double trace() const {
        double s = 0.0;
        for (std::size_t m = 0; m < v.size(); ++m) s += lambda[m] * v[m].norm2();
        return s;
    }
};

template <int D>
struct FiberedDensity {
    BasisPtr<D> basis;
    KGrid<D> grid;
    double hbar = 1.0;
    std::vector<DensityFiber<D>> fibers;

    /// Rank-one fibers |psi_k><psi_k|.
    static FiberedDensity pure(const FiberedState<D>& psi, double hbar) {
        FiberedDensity R{psi.basis, psi.grid, hbar, {}};
        for (const auto& f : psi.fibers) R.fibers.push_back({{1.0}, {f}});
        return R;
    }

    bool rank_one() const {
        for (const auto& f : fibers)
            if (f.rank() != 1 || f.lambda[0] != 1.0) return false;
        return true;
    }

    FiberedDensity scaled(double c) const {
        FiberedDensity R = *this;
        for (auto& f : R.fibers)
            for (auto& l : f.lambda) l *= c;
        return R;
    }
};

/// avg_k Tr R_k.
template <int D>
double periodic_trace(const FiberedDensity<D>& R) {
    std::vector<double> t;
    t.reserve(R.fibers.size());
    for (const auto& f : R.fibers) t.push_back(f.trace());
    return fiber_average(t);
}

/// Fiber k of T_L[f]: sum_j w_j f_j |percoh(q_j, p_j - hbar k)><...|.
template <int D>
FiberedDensity<D> toeplitz_quantize(const PhaseSpaceDensity<D>& f, const KGrid<D>& grid, const BasisPtr<D>& basis,
                                    double hbar, double mass_tol = 1e-8) {
    if (!(hbar > 0.0)) throw DomainError("toeplitz_quantize: hbar must be positive");
    if (std::abs(f.mass() - 1.0) > mass_tol) throw DomainError("toeplitz_quantize: density is not normalized");
    for (std::size_t j = 0; j < f.size(); ++j)
        if (f.w[j] * f.f[j] < 0.0) throw DomainError("toeplitz_quantize: negative density value");
    FiberedDensity<D> R{basis, grid, hbar, {}};
    R.fibers.resize(grid.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(grid.size()); ++i) {
        auto& fib = R.fibers[static_cast<std::size_t>(i)];
        const auto& k = grid.points[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double lam = f.w[j] * f.f[j];
            if (lam == 0.0) continue;
            fib.lambda.push_back(lam);
            fib.v.push_back(periodized_coherent<D>({f.q[j], f.p[j] - hbar * k, hbar}, basis));
        }
    }
    return R;
}

/// Position density rho(y_j) = avg_k sum_m lambda_m |v_m(y_j)|^2 on the grid.
template <int D>
std::vector<double> position_density(const FiberedDensity<D>& R) {
    const std::size_t n = R.basis->size();
    std::vector<std::vector<double>> per(R.fibers.size(), std::vector<double>(n, 0.0));
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(R.fibers.size()); ++i) {
        auto& acc = per[static_cast<std::size_t>(i)];
        const auto& fib = R.fibers[static_cast<std::size_t>(i)];
        std::vector<cplx> s;
        for (std::size_t m = 0; m < fib.rank(); ++m) {
            R.basis->to_samples(fib.v[m].c, s);
            for (std::size_t j = 0; j < n; ++j) acc[j] += fib.lambda[m] * std::norm(s[j]);
        }
    }
    std::vector<double> rho(n, 0.0);
    for (const auto& acc : per)
        for (std::size_t j = 0; j < n; ++j) rho[j] += acc[j];
    const double wk = 1.0 / static_cast<double>(R.fibers.size());
    for (auto& v : rho) v *= wk;
    return rho;
}

/// avg_k Tr(1_Omega R_k 1_Omega), with a grid point counted when it lies in Omega.
template <int D>
double observe(const FiberedDensity<D>& R, const Region<D>& omega) {
    if (omega.empty()) return 0.0;
    const auto rho = position_density(R);
    double s = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j)
        if (omega.contains(R.basis->point(j))) s += rho[j];
    return s * R.basis->point_weight();
}

/// Phase-space grid for Husimi densities: every `q_stride`-th spectral grid
/// point on each axis, times a uniform momentum grid (cell-centred) on [p_lo, p_hi].
template <int D>
struct HusimiGrid {
    int q_stride = 1;
    Vec<D> p_lo{}, p_hi{};
    int np = 2;

    double dp(int a) const { return (p_hi[a] - p_lo[a]) / np; }

    std::vector<Vec<D>> momenta() const {
        std::vector<Vec<D>> out;
        for_each_index<D>(static_cast<std::size_t>(np), [&](std::size_t, const auto& idx) {
            Vec<D> p{};
            for (int a = 0; a < D; ++a) p[a] = p_lo[a] + (static_cast<double>(idx[a]) + 0.5) * dp(a);
            out.push_back(p);
        });
        return out;
    }
};

/// Momentum window covering hbar (G + k) for every significant plane-wave
/// component of R, padded by `pad_sigmas` sqrt(hbar); spacing about `spacing` sqrt(hbar).
template <int D>
HusimiGrid<D> auto_husimi_grid(const FiberedDensity<D>& R, double pad_sigmas = 8.0, double spacing = 0.4,
                               int q_stride = 1) {
    HusimiGrid<D> g;
    g.q_stride = q_stride;
    const double h = R.hbar;
    Vec<D> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < R.fibers.size(); ++i) {
        const auto& k = R.grid.points[i];
        for (const auto& v : R.fibers[i].v) {
            double mx = 0.0;
            for (const auto& c : v.c) mx = std::max(mx, std::norm(c));
            for (std::size_t n = 0; n < v.c.size(); ++n) {
                if (std::norm(v.c[n]) <= 1e-32 * mx) continue;
                const Vec<D> pc = h * (R.basis->G(n) + k);
                for (int a = 0; a < D; ++a) {
                    lo[a] = std::min(lo[a], pc[a]);
                    hi[a] = std::max(hi[a], pc[a]);
                }
            }
        }
    }
    const double pad = pad_sigmas * std::sqrt(h);
    double width = 0.0;
    for (int a = 0; a < D; ++a) {
        g.p_lo[a] = lo[a] - pad;
        g.p_hi[a] = hi[a] + pad;
        width = std::max(width, g.p_hi[a] - g.p_lo[a]);
    }
    g.np = std::max(2, static_cast<int>(std::ceil(width / (spacing * std::sqrt(h)))));
    // equal spacing on every axis: grow the narrower windows symmetrically
    const double step = width / g.np;
    for (int a = 0; a < D; ++a) {
        const double extra = 0.5 * (g.np * step - (g.p_hi[a] - g.p_lo[a]));
        g.p_lo[a] -= extra;
        g.p_hi[a] += extra;
    }
    return g;
}

namespace detail {

/// |<percoh(q_j, p')|v>|^2 for every q_j on the spectral grid, by one inverse FFT.
template <int D>
void coherent_overlaps(const PeriodicField<D>& v, const Vec<D>& pprime, double hbar, std::vector<cplx>& work,
                       std::vector<cplx>& out) {
    const auto& basis = *v.basis;
    work.resize(basis.size());
    const Vec<D> w = (1.0 / hbar) * pprime;
    for (std::size_t n = 0; n < basis.size(); ++n)
        work[n] = v.c[n] * std::exp(-0.5 * hbar * norm2<D>(basis.G(n) - w));
    fft::backward<D>(work, out, basis.N());
}

template <int D>
double coherent_overlap_prefactor(double hbar, double cell_volume) {
    return std::pow(pi * hbar, -0.25 * D) * std::pow(two_pi * hbar, 0.5 * D) / std::sqrt(cell_volume);
}

}  // namespace detail

/// Per-fiber Husimi densities f_k(q, p) = (2 pi hbar)^{-d} sum_m lambda_m |<percoh(q, p - hbar k)|v_m>|^2
/// on the grid, laid out as [fiber][p index * nq_total + q index].
template <int D>
struct HusimiData {
    HusimiGrid<D> grid;
    std::vector<std::size_t> q_index;  ///< spectral grid indices of the q nodes
    std::vector<Vec<D>> momenta;
    double node_weight = 0.0;          ///< dq^d dp^d
    std::vector<std::vector<double>> fk;

    std::size_t nodes() const { return q_index.size() * momenta.size(); }
};

template <int D>
HusimiData<D> husimi_fibers(const FiberedDensity<D>& R, const HusimiGrid<D>& grid) {
    const auto& basis = *R.basis;
    const int N = basis.N();
    if (grid.q_stride < 1 || N % grid.q_stride != 0)
        throw DomainError("husimi: q stride must divide the grid size " + std::to_string(N));
    HusimiData<D> out;
    out.grid = grid;
    out.momenta = grid.momenta();
    const int nq_axis = N / grid.q_stride;
    // Subgrid in lattice coordinates t = s/N; keep every stride-th signed index.
    for (std::size_t j = 0; j < basis.size(); ++j) {
        const IVec<D> s = basis.index(j);
        bool keep = true;
        for (long v : s)
            if (((v % grid.q_stride) + grid.q_stride) % grid.q_stride != 0) keep = false;
        if (keep) out.q_index.push_back(j);
    }
    double dpv = 1.0;
    for (int a = 0; a < D; ++a) dpv *= grid.dp(a);
    out.node_weight = basis.cell_volume() / std::pow(static_cast<double>(nq_axis), D) * dpv;

    const double h = R.hbar;
    const double pref = detail::coherent_overlap_prefactor<D>(h, basis.cell_volume());
    const double scale = pref * pref * std::pow(two_pi * h, -static_cast<double>(D));
    const std::size_t nq = out.q_index.size();
    out.fk.assign(R.fibers.size(), std::vector<double>(nq * out.momenta.size(), 0.0));
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(R.fibers.size()); ++i) {
        const auto& fib = R.fibers[static_cast<std::size_t>(i)];
        const auto& k = R.grid.points[static_cast<std::size_t>(i)];
        auto& dst = out.fk[static_cast<std::size_t>(i)];
        std::vector<cplx> work, amp;
        for (std::size_t ip = 0; ip < out.momenta.size(); ++ip) {
            const Vec<D> pprime = out.momenta[ip] - h * k;
            for (std::size_t m = 0; m < fib.rank(); ++m) {
                detail::coherent_overlaps<D>(fib.v[m], pprime, h, work, amp);
                for (std::size_t iq = 0; iq < nq; ++iq)
                    dst[ip * nq + iq] += scale * fib.lambda[m] * std::norm(amp[out.q_index[iq]]);
            }
        }
    }
    return out;
}

/// The L-periodic Husimi density avg_k f_k as a phase-space density on the grid.
template <int D>
PhaseSpaceDensity<D> husimi(const FiberedDensity<D>& R, const HusimiGrid<D>& grid) {
    const auto data = husimi_fibers(R, grid);
    PhaseSpaceDensity<D> out;
    out.nq = R.basis->N() / grid.q_stride;
    out.np = grid.np;
    out.p_lo = grid.p_lo;
    out.p_hi = grid.p_hi;
    const std::size_t nq = data.q_index.size();
    const double wk = 1.0 / static_cast<double>(R.fibers.size());
    for (std::size_t ip = 0; ip < data.momenta.size(); ++ip) {
        for (std::size_t iq = 0; iq < nq; ++iq) {
            double s = 0.0;
            for (const auto& f : data.fk) s += f[ip * nq + iq];
            out.push(R.basis->point(data.q_index[iq]), data.momenta[ip], data.node_weight, s * wk);
        }
    }
    return out;
}

template <int D>
PhaseSpaceDensity<D> husimi(const FiberedDensity<D>& R) {
    return husimi(R, auto_husimi_grid(R));
}

/// Pointwise Husimi value avg_k f_k(q, p), by direct inner products.
template <int D>
double husimi_at(const FiberedDensity<D>& R, const Vec<D>& q, const Vec<D>& p) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < R.fibers.size(); ++i) {
        const auto c = periodized_coherent<D>({q, p - R.hbar * R.grid.points[i], R.hbar}, R.basis);
        double s = 0.0;
        for (std::size_t m = 0; m < R.fibers[i].rank(); ++m)
            s += R.fibers[i].lambda[m] * std::norm(inner(c, R.fibers[i].v[m]));
        vals.push_back(s * std::pow(two_pi * R.hbar, -static_cast<double>(D)));
    }
    return fiber_average(vals);
}

}  // namespace blochsc
