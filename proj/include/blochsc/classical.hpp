#pragma once

// Hamiltonian flows for H(x, xi) = |xi|^2/2 + V(x), the fiber flows
// Phi_{k,t}(x, xi) = Phi_t(x, xi + hbar k) - (0, hbar k), Liouville transport
// by characteristics and the geometric-control constant.

#include <random>

#include "potential.hpp"
#include "quantization.hpp"
#include "region.hpp"

namespace blochsc {

template <int D>
struct PhasePoint {
    Vec<D> x{};
    Vec<D> xi{};
};

template <int D>
double hamiltonian(const PhasePoint<D>& z, const TrigPotential<D>& V) {
    return 0.5 * norm2<D>(z.xi) + V(z.x);
}

namespace detail {

// n Stormer-Verlet (kick-drift-kick) steps of size h for X' = Xi + shift, Xi' = -grad V(X).
template <int D>
PhasePoint<D> verlet(PhasePoint<D> z, double h, long n, const TrigPotential<D>& V, const Vec<D>& shift) {
    if (n == 0) return z;
    if (V.empty()) {
        z.x = z.x + (h * static_cast<double>(n)) * (z.xi + shift);
        return z;
    }
    Vec<D> g = V.gradient(z.x);
    for (long s = 0; s < n; ++s) {
        z.xi = z.xi - (0.5 * h) * g;
        z.x = z.x + h * (z.xi + shift);
        g = V.gradient(z.x);
        z.xi = z.xi - (0.5 * h) * g;
    }
    return z;
}

inline long step_count(double t, double dt) {
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    return static_cast<long>(std::ceil(std::abs(t) / dt - 1e-12));
}

}  // namespace detail

/// Stormer-Verlet approximation of Phi_t with ceil(|t|/dt) equal steps; t < 0 runs backwards.
template <int D>
PhasePoint<D> flow(const PhasePoint<D>& z, double t, const TrigPotential<D>& V, double dt) {
    const long n = detail::step_count(t, dt);
    if (n == 0) return z;
    return detail::verlet<D>(z, t / static_cast<double>(n), n, V, zero_vec<D>());
}

/// Phi_{k,t}(x, xi) = Phi_t(x, xi + hbar k) - (0, hbar k).
template <int D>
PhasePoint<D> k_flow(const PhasePoint<D>& z, const Vec<D>& k, double hbar, double t, const TrigPotential<D>& V,
                     double dt) {
    const Vec<D> hk = hbar * k;
    PhasePoint<D> out = flow<D>({z.x, z.xi + hk}, t, V, dt);
    out.xi = out.xi - hk;
    return out;
}

/// The fiber system X' = Xi + hbar k, Xi' = -grad V(X), integrated directly.
template <int D>
PhasePoint<D> k_flow_direct(const PhasePoint<D>& z, const Vec<D>& k, double hbar, double t,
                            const TrigPotential<D>& V, double dt) {
    const long n = detail::step_count(t, dt);
    if (n == 0) return z;
    return detail::verlet<D>(z, t / static_cast<double>(n), n, V, hbar * k);
}

/// Push-forward of the node measure by Phi_t: nodes move, weights stay.
/// Positions are reduced to the cell when `reduce` is set (f is L-periodic in x).
template <int D>
PhaseSpaceDensity<D> transport_density(const PhaseSpaceDensity<D>& f, double t, const TrigPotential<D>& V, double dt,
                                       bool reduce = true) {
    PhaseSpaceDensity<D> out = f;
    out.nq = out.np = 0;
#pragma omp parallel for schedule(static)
    for (long j = 0; j < static_cast<long>(f.size()); ++j) {
        const auto i = static_cast<std::size_t>(j);
        const auto z = flow<D>({f.q[i], f.p[i]}, t, V, dt);
        out.q[i] = reduce ? V.lattice().reduce(z.x) : z.x;
        out.p[i] = z.xi;
    }
    return out;
}

template <int D>
struct Trajectory {
    std::vector<double> t;
    std::vector<PhasePoint<D>> z;
};

/// Samples of Phi_t(z) at t = i T / steps, i = 0..steps (one Verlet step between samples).
template <int D>
Trajectory<D> trajectory(const PhasePoint<D>& z0, double T, int steps, const TrigPotential<D>& V) {
    if (steps < 1) throw DomainError("trajectory: need at least one step");
    Trajectory<D> tr;
    const double h = T / steps;
    PhasePoint<D> z = z0;
    for (int i = 0; i <= steps; ++i) {
        tr.t.push_back(h * i);
        tr.z.push_back(z);
        z = detail::verlet<D>(z, h, 1, V, zero_vec<D>());
    }
    return tr;
}

struct GcOptions {
    int per_axis = 0;      ///< tensor samples per phase-space axis (0: 32 for d=1, 8 above)
    int quasi = 1000;      ///< additional quasi-random samples per box
    int steps = 2000;      ///< uniform time steps on [0, T]
    std::uint64_t seed = 0;
};

template <int D>
struct GcEstimate {
    double value = 0.0;       ///< min over samples of the trapezoid time integral
    bool violated = false;    ///< true when some sample never meets Omega on the time grid
    std::size_t samples = 0;
    int steps = 0;
    double time_resolution = 0.0;
    PhasePoint<D> argmin{};
};

/// Additive recurrence with the generalized golden ratio in `dim` dimensions,
/// offset by a seed-derived shift. Deterministic for a given seed.
inline std::vector<std::vector<double>> quasi_random(std::size_t count, int dim, std::uint64_t seed) {
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dim + 1));
    std::vector<double> alpha(static_cast<std::size_t>(dim)), offset(static_cast<std::size_t>(dim));
    std::mt19937_64 gen(seed);
    for (int i = 0; i < dim; ++i) {
        alpha[static_cast<std::size_t>(i)] = std::fmod(std::pow(1.0 / phi, i + 1), 1.0);
        offset[static_cast<std::size_t>(i)] = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    }
    std::vector<std::vector<double>> pts(count, std::vector<double>(static_cast<std::size_t>(dim)));
    for (std::size_t n = 0; n < count; ++n)
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            const double v = offset[i] + static_cast<double>(n + 1) * alpha[i];
            pts[n][i] = v - std::floor(v);
        }
    return pts;
}

/// Numerical estimate of C_GC[T, K, Omega]: minimum over sampled (x, xi) in K of
/// int_0^T 1_Omega(P_Gamma X(t)) dt, by the trapezoid rule on a uniform time grid.
template <int D>
GcEstimate<D> gc_constant(double T, const std::vector<PhaseBox<D>>& K, const Region<D>& omega,
                          const TrigPotential<D>& V, GcOptions opt = {}) {
    if (!(T > 0.0)) throw DomainError("gc_constant: T must be positive");
    if (opt.steps < 1) throw DomainError("gc_constant: need at least one time step");
    const int per_axis = opt.per_axis > 0 ? opt.per_axis : (D == 1 ? 32 : 8);
    std::vector<PhasePoint<D>> samples;
    const auto qr = quasi_random(static_cast<std::size_t>(std::max(opt.quasi, 0)), 2 * D, opt.seed);
    for (const auto& box : K) {
        auto coord = [&](int axis, double u) {
            const auto& b = axis < D ? box.x : box.xi;
            const int a = axis % D;
            return b.lo[a] + u * (b.hi[a] - b.lo[a]);
        };
        for_each_index<2 * D>(static_cast<std::size_t>(per_axis), [&](std::size_t, const auto& idx) {
            PhasePoint<D> z;
            for (int a = 0; a < 2 * D; ++a) {
                const double u = per_axis == 1 ? 0.5 : static_cast<double>(idx[a]) / (per_axis - 1);
                (a < D ? z.x[a] : z.xi[a - D]) = coord(a, u);
            }
            samples.push_back(z);
        });
        for (const auto& u : qr) {
            PhasePoint<D> z;
            for (int a = 0; a < 2 * D; ++a) (a < D ? z.x[a] : z.xi[a - D]) = coord(a, u[static_cast<std::size_t>(a)]);
            samples.push_back(z);
        }
    }
    if (samples.empty()) throw DomainError("gc_constant: empty sample set");

    const double h = T / opt.steps;
    std::vector<double> vals(samples.size());
#pragma omp parallel for schedule(static)
    for (long s = 0; s < static_cast<long>(samples.size()); ++s) {
        PhasePoint<D> z = samples[static_cast<std::size_t>(s)];
        double acc = 0.0;
        for (int i = 0; i <= opt.steps; ++i) {
            const double wt = (i == 0 || i == opt.steps) ? 0.5 * h : h;
            if (omega.contains(z.x)) acc += wt;
            if (i < opt.steps) z = detail::verlet<D>(z, h, 1, V, zero_vec<D>());
        }
        vals[static_cast<std::size_t>(s)] = acc;
    }
    GcEstimate<D> est;
    est.samples = samples.size();
    est.steps = opt.steps;
    est.time_resolution = h;
    std::size_t arg = 0;
    for (std::size_t s = 1; s < vals.size(); ++s)
        if (vals[s] < vals[arg]) arg = s;
    est.value = vals[arg];
    est.argmin = samples[arg];
    est.violated = est.value <= 0.0;
    return est;
}

}  // namespace blochsc
