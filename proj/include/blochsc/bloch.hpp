#pragma once

// Discrete Bloch transform
//   (B u)(k)(x) = sum_l u(x + l) exp(-i k.(x + l)),
// its inverse u(x) = avg_k (B u)(k)(x) exp(i k.x), and the uniform quasimomentum grid.

#include <functional>
#include <numeric>

#include "spectral.hpp"

namespace blochsc {

/// Shifted uniform grid on the reciprocal cell: reduced coordinates
/// (j + 1/2)/N_k - 1/2 per axis, so no point lies on the cell boundary.
template <int D>
struct KGrid {
    std::vector<Vec<D>> points;   ///< Cartesian quasimomenta
    std::vector<Vec<D>> reduced;  ///< coordinates in the reciprocal basis
    std::vector<double> weights;  ///< uniform, sum to 1
    int per_axis = 0;

    KGrid() = default;

    KGrid(const Lattice<D>& lat, int nk) : per_axis(nk) {
        if (nk < 1) throw DomainError("k-grid needs at least one point per axis");
        const std::size_t total = ipow(static_cast<std::size_t>(nk), D);
        points.resize(total);
        reduced.resize(total);
        weights.assign(total, 1.0 / static_cast<double>(total));
        for_each_index<D>(static_cast<std::size_t>(nk), [&](std::size_t flat, const auto& idx) {
            Vec<D> r{};
            for (int a = 0; a < D; ++a)
                r[a] = (static_cast<double>(idx[a]) + 0.5) / static_cast<double>(nk) - 0.5;
            reduced[flat] = r;
            points[flat] = lat.reciprocal(r);
        });
    }

    /// Explicit list of Cartesian points with uniform weights.
    static KGrid from_points(const Lattice<D>& lat, std::vector<Vec<D>> pts) {
        if (pts.empty()) throw DomainError("k-grid must not be empty");
        KGrid g;
        g.points = std::move(pts);
        g.weights.assign(g.points.size(), 1.0 / static_cast<double>(g.points.size()));
        for (const auto& k : g.points) {
            Vec<D> r{};
            for (int i = 0; i < D; ++i) r[i] = dot<D>(k, lat.a(i)) / two_pi;
            g.reduced.push_back(r);
        }
        return g;
    }

    std::size_t size() const { return points.size(); }
};

/// Uniform average over the grid, summed in index order.
inline double fiber_average(const std::vector<double>& values) {
    if (values.empty()) throw DomainError("fiber_average: empty grid");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

inline cplx fiber_average(const std::vector<cplx>& values) {
    if (values.empty()) throw DomainError("fiber_average: empty grid");
    cplx s{0.0, 0.0};
    for (const auto& v : values) s += v;
    return s / static_cast<double>(values.size());
}

template <int D>
struct FiberedState {
    BasisPtr<D> basis;
    KGrid<D> grid;
    std::vector<PeriodicField<D>> fibers;

    /// avg_k ||u_k||^2
    double norm2() const {
        std::vector<double> v;
        v.reserve(fibers.size());
        for (const auto& f : fibers) v.push_back(f.norm2());
        return fiber_average(v);
    }
};

/// A function on R^d that can be sampled pointwise.
template <int D>
using SampledFunction = std::function<cplx(const Vec<D>&)>;

/// Samples of u on the translated grids y_j + l, l in [-L, L]^D.
template <int D>
struct TranslateWindow {
    int L = 0;
    std::vector<IVec<D>> shifts;
    std::vector<Vec<D>> offsets;               ///< Cartesian lattice vector per shift
    std::vector<std::vector<cplx>> values;     ///< values[shift][grid point]

    static TranslateWindow sample(const SampledFunction<D>& u, const SpectralBasis<D>& basis, int L) {
        if (L < 0) throw DomainError("translate window must be nonnegative");
        TranslateWindow w;
        w.L = L;
        for_each_index<D>(static_cast<std::size_t>(2 * L + 1), [&](std::size_t, const auto& idx) {
            IVec<D> n{};
            for (int a = 0; a < D; ++a) n[a] = static_cast<long>(idx[a]) - L;
            w.shifts.push_back(n);
            w.offsets.push_back(basis.lattice().lattice_vector(n));
        });
        w.values.resize(w.shifts.size());
        for (std::size_t s = 0; s < w.shifts.size(); ++s) {
            auto& row = w.values[s];
            row.resize(basis.size());
            for (std::size_t j = 0; j < basis.size(); ++j) row[j] = u(basis.point(j) + w.offsets[s]);
        }
        return w;
    }

    /// max |u| over the outermost shell of translates relative to max |u| overall.
    double tail() const {
        double edge = 0.0, all = 0.0;
        for (std::size_t s = 0; s < shifts.size(); ++s) {
            long sh = 0;
            for (long v : shifts[s]) sh = std::max(sh, std::abs(v));
            for (const auto& v : values[s]) {
                const double a = std::abs(v);
                all = std::max(all, a);
                if (sh == L) edge = std::max(edge, a);
            }
        }
        return all > 0.0 ? edge / all : 0.0;
    }
};

/// One Bloch fiber of sampled data at an arbitrary quasimomentum k.
template <int D>
PeriodicField<D> bloch_fiber(const TranslateWindow<D>& w, const BasisPtr<D>& basis, const Vec<D>& k) {
    std::vector<cplx> acc(basis->size(), cplx{0.0, 0.0});
    for (std::size_t s = 0; s < w.shifts.size(); ++s) {
        const auto& row = w.values[s];
        for (std::size_t j = 0; j < basis->size(); ++j) {
            const double ph = -dot<D>(k, basis->point(j) + w.offsets[s]);
            acc[j] += row[j] * cplx{std::cos(ph), std::sin(ph)};
        }
    }
    return PeriodicField<D>::from_samples(basis, acc);
}

/// (B u)(k) on every grid fiber. Throws AccuracyError when the sampled
/// translate window does not capture u to relative tolerance `tol`.
template <int D>
FiberedState<D> bloch_transform(const SampledFunction<D>& u, const KGrid<D>& grid, const BasisPtr<D>& basis,
                                int L_cut, double tol = 1e-14) {
    const auto w = TranslateWindow<D>::sample(u, *basis, L_cut);
    if (w.tail() > tol)
        throw AccuracyError("bloch_transform: translate window L_cut=" + std::to_string(L_cut) +
                            " leaves tail " + std::to_string(w.tail()));
    FiberedState<D> out{basis, grid, {}};
    out.fibers.resize(grid.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(grid.size()); ++i)
        out.fibers[static_cast<std::size_t>(i)] = bloch_fiber<D>(w, basis, grid.points[static_cast<std::size_t>(i)]);
    return out;
}

/// u(x) = avg_k F_k(x) exp(i k.x) at an arbitrary point x.
template <int D>
cplx inverse_bloch(const FiberedState<D>& F, const Vec<D>& x) {
    std::vector<cplx> terms(F.fibers.size());
    for (std::size_t i = 0; i < F.fibers.size(); ++i) {
        const double ph = dot<D>(F.grid.points[i], x);
        terms[i] = F.fibers[i](x) * cplx{std::cos(ph), std::sin(ph)};
    }
    return fiber_average(terms);
}

/// Inverse transform on the translated grids y_j + l, l in [-L, L]^D.
/// The discrete k-average aliases translates that differ by N_k cells, so L
/// should stay below N_k / 2.
template <int D>
TranslateWindow<D> inverse_bloch_window(const FiberedState<D>& F, int L) {
    const auto& basis = *F.basis;
    TranslateWindow<D> w = TranslateWindow<D>::sample([](const Vec<D>&) { return cplx{0.0, 0.0}; }, basis, L);
    const double wk = 1.0 / static_cast<double>(F.fibers.size());
    for (std::size_t i = 0; i < F.fibers.size(); ++i) {
        const auto s = F.fibers[i].samples();
        const auto& k = F.grid.points[i];
        for (std::size_t sh = 0; sh < w.shifts.size(); ++sh) {
            for (std::size_t j = 0; j < basis.size(); ++j) {
                const double ph = dot<D>(k, basis.point(j) + w.offsets[sh]);
                w.values[sh][j] += wk * s[j] * cplx{std::cos(ph), std::sin(ph)};
            }
        }
    }
    return w;
}

/// exp(-i K.x) phi for K = sum_i n_i b_i: a shift of the coefficient array.
/// Coefficients pushed outside the band are dropped.
template <int D>
PeriodicField<D> shift_quasimomentum(const PeriodicField<D>& phi, const IVec<D>& nK) {
    PeriodicField<D> out(phi.basis);
    for (std::size_t i = 0; i < phi.c.size(); ++i) {
        IVec<D> n = phi.basis->index(i);
        for (int a = 0; a < D; ++a) n[a] -= nK[a];
        const std::size_t j = phi.basis->flat_of(n);
        if (j < phi.basis->size()) out.c[j] = phi.c[i];
    }
    return out;
}

}  // namespace blochsc
