#pragma once

// Gaussian coherent states |q,p>(y) = (pi hbar)^{-d/4} exp(-|y-q|^2/2hbar) exp(i p.y/hbar)
// and their L-periodizations, sum_l |q,p>(y + l).

#include <random>

#include "bloch.hpp"

namespace blochsc {

template <int D>
struct CoherentParams {
    Vec<D> q{};
    Vec<D> p{};
    double hbar = 1.0;

    void validate() const {
        if (!(hbar > 0.0) || !std::isfinite(hbar)) throw DomainError("coherent state: hbar must be positive");
        if (!all_finite<D>(q) || !all_finite<D>(p)) throw DomainError("coherent state: non-finite centre");
    }
};

template <int D>
cplx coherent_state(const CoherentParams<D>& s, const Vec<D>& y) {
    const Vec<D> r = y - s.q;
    const double amp = std::pow(pi * s.hbar, -0.25 * D) * std::exp(-norm2<D>(r) / (2.0 * s.hbar));
    const double ph = dot<D>(s.p, y) / s.hbar;
    return amp * cplx{std::cos(ph), std::sin(ph)};
}

/// <e_G | percoh(q, p')> for the periodization of |q, p'>, by Poisson summation:
/// the continuum Fourier transform of the Gaussian at frequency G - p'/hbar.
template <int D>
cplx coherent_planewave_coeff(const CoherentParams<D>& s, const Vec<D>& G, double cell_volume) {
    const Vec<D> w = (1.0 / s.hbar) * s.p - G;
    const double pref = std::pow(pi * s.hbar, -0.25 * D) * std::pow(two_pi * s.hbar, 0.5 * D) / std::sqrt(cell_volume);
    const double ph = dot<D>(w, s.q);
    return pref * std::exp(-0.5 * s.hbar * norm2<D>(w)) * cplx{std::cos(ph), std::sin(ph)};
}

/// Closed-form periodized coherent state percoh(q, p) on the given band.
/// The fiber-k Bloch component of |q,p> is periodized_coherent({q, p - hbar k, hbar}).
template <int D>
PeriodicField<D> periodized_coherent(const CoherentParams<D>& s, const BasisPtr<D>& basis) {
    s.validate();
    PeriodicField<D> f(basis);
    const double vol = basis->cell_volume();
    // The Gaussian factor is separable only on orthogonal lattices, so the
    // coefficients are evaluated directly; cost is O(size).
    for (std::size_t i = 0; i < basis->size(); ++i) f.c[i] = coherent_planewave_coeff<D>(s, basis->G(i), vol);
    return f;
}

/// percoh with the translate-sum definition sampled on the grid (L_cut translates
/// per axis). Throws AccuracyError when the window is too small.
template <int D>
PeriodicField<D> periodized_coherent_sum(const CoherentParams<D>& s, const BasisPtr<D>& basis, int L_cut,
                                         double tol = 1e-14) {
    s.validate();
    const auto w = TranslateWindow<D>::sample([&](const Vec<D>& y) { return coherent_state<D>(s, y); }, *basis, L_cut);
    if (w.tail() > tol) throw AccuracyError("periodized_coherent: translate window too small");
    std::vector<cplx> acc(basis->size(), cplx{0.0, 0.0});
    for (const auto& row : w.values)
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += row[j];
    return PeriodicField<D>::from_samples(basis, acc);
}

/// Finite superposition sum_j a_j |q_j, p_j> of coherent states with a common hbar.
template <int D>
struct WavePacket {
    double hbar = 0.1;
    std::vector<cplx> amp;
    std::vector<Vec<D>> q, p;

    cplx operator()(const Vec<D>& y) const {
        cplx s{0.0, 0.0};
        for (std::size_t j = 0; j < amp.size(); ++j) s += amp[j] * coherent_state<D>({q[j], p[j], hbar}, y);
        return s;
    }

    /// ||u||^2 on R^d from the closed-form Gram matrix
    /// <q1,p1|q2,p2> = exp(-|q1-q2|^2/4hbar - |p1-p2|^2/4hbar + i (p2-p1).(q1+q2)/2hbar).
    double norm2() const {
        cplx s{0.0, 0.0};
        for (std::size_t a = 0; a < amp.size(); ++a)
            for (std::size_t b = 0; b < amp.size(); ++b) {
                const double re = -(blochsc::norm2<D>(q[a] - q[b]) + blochsc::norm2<D>(p[a] - p[b])) / (4.0 * hbar);
                const double im = dot<D>(p[b] - p[a], 0.5 * (q[a] + q[b])) / hbar;
                s += std::conj(amp[a]) * amp[b] * std::exp(cplx{re, im});
            }
        return s.real();
    }
};

/// Random packet of `terms` coherent states centred in the cell with momenta in [-p_max, p_max]^D.
template <int D, class Rng>
WavePacket<D> random_packet(Rng& rng, const Lattice<D>& lat, double hbar, double p_max, int terms = 3) {
    std::uniform_real_distribution<double> u(-0.5, 0.5), pm(-p_max, p_max), ph(0.0, two_pi), mag(0.2, 1.0);
    WavePacket<D> w;
    w.hbar = hbar;
    for (int j = 0; j < terms; ++j) {
        Vec<D> t{}, p{};
        for (int a = 0; a < D; ++a) {
            t[a] = u(rng);
            p[a] = pm(rng);
        }
        w.q.push_back(lat.to_cartesian(t));
        w.p.push_back(p);
        w.amp.push_back(std::polar(mag(rng), ph(rng)));
    }
    return w;
}

/// Smallest translate window whose Gaussian tail exp(-(L gamma_-)^2 / 2hbar)
/// falls below `tol`.
inline int translate_window_for(double hbar, double gamma_minus, double tol = 1e-14) {
    const double r = std::sqrt(-2.0 * hbar * std::log(tol));
    return std::max(1, static_cast<int>(std::ceil(r / gamma_minus)) + 1);
}

}  // namespace blochsc
