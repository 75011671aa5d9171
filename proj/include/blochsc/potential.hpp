#pragma once

// L-periodic potentials V(x) = sum_G c_G cos(G.x + phi_G) with G on the reciprocal lattice.

#include <algorithm>

#include "spectral.hpp"

namespace blochsc {

template <int D>
struct TrigTerm {
    IVec<D> n{};        ///< reciprocal-lattice coordinates of G
    double amplitude = 0.0;
    double phase = 0.0;
};

template <int D>
class TrigPotential {
public:
    TrigPotential() : lat_(Lattice<D>::cubic()) {}
    TrigPotential(const Lattice<D>& lat, std::vector<TrigTerm<D>> terms) : lat_(lat), terms_(std::move(terms)) {
        for (const auto& t : terms_) {
            Vec<D> nd{};
            for (int i = 0; i < D; ++i) nd[i] = static_cast<double>(t.n[i]);
            g_.push_back(lat_.reciprocal(nd));
        }
    }

    const std::vector<TrigTerm<D>>& terms() const { return terms_; }
    const Lattice<D>& lattice() const { return lat_; }
    bool empty() const { return terms_.empty(); }

    double operator()(const Vec<D>& x) const {
        double v = 0.0;
        for (std::size_t i = 0; i < terms_.size(); ++i)
            v += terms_[i].amplitude * std::cos(dot<D>(g_[i], x) + terms_[i].phase);
        return v;
    }

    Vec<D> gradient(const Vec<D>& x) const {
        Vec<D> g = zero_vec<D>();
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            const double s = -terms_[i].amplitude * std::sin(dot<D>(g_[i], x) + terms_[i].phase);
            g = g + s * g_[i];
        }
        return g;
    }

    Mat<D> hessian(const Vec<D>& x) const {
        Mat<D> h{};
        for (auto& r : h) r.fill(0.0);
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            const double c = -terms_[i].amplitude * std::cos(dot<D>(g_[i], x) + terms_[i].phase);
            for (int a = 0; a < D; ++a)
                for (int b = 0; b < D; ++b) h[a][b] += c * g_[i][a] * g_[i][b];
        }
        return h;
    }

    /// Largest |n|_inf among the terms (0 for V = 0).
    long band() const {
        long b = 0;
        for (const auto& t : terms_)
            for (long v : t.n) b = std::max(b, std::abs(v));
        return b;
    }

    /// sum |c_G| |G|^2, an upper bound for Lip(grad V).
    double lip_grad_analytic() const {
        double s = 0.0;
        for (std::size_t i = 0; i < terms_.size(); ++i) s += std::abs(terms_[i].amplitude) * norm2<D>(g_[i]);
        return s;
    }

    /// max over a uniform grid on Gamma of the Hessian spectral norm, times (1 + 1e-3).
    double lip_grad_sampled(int per_axis = default_samples()) const {
        double m = 0.0;
        for_each_index<D>(static_cast<std::size_t>(per_axis), [&](std::size_t, const auto& idx) {
            Vec<D> t{};
            for (int a = 0; a < D; ++a) t[a] = static_cast<double>(idx[a]) / per_axis - 0.5;
            m = std::max(m, symmetric_spectral_norm(hessian(lat_.to_cartesian(t))));
        });
        return m * (1.0 + 1e-3);
    }

    /// Reported Lip(grad V): the smaller of the analytic and sampled values.
    double lip_grad() const { return std::min(lip_grad_analytic(), lip_grad_sampled()); }

    /// Plane-wave coefficients of V on `basis` (requires band() <= M).
    std::vector<cplx> coefficients(const SpectralBasis<D>& basis) const {
        std::vector<cplx> c(basis.size(), cplx{0.0, 0.0});
        const double s = std::sqrt(basis.cell_volume());
        for (const auto& t : terms_) {
            IVec<D> neg{};
            for (int a = 0; a < D; ++a) neg[a] = -t.n[a];
            const std::size_t ip = basis.flat_of(t.n), im = basis.flat_of(neg);
            if (ip >= basis.size()) throw AccuracyError("potential band exceeds plane-wave order");
            c[ip] += 0.5 * s * t.amplitude * std::polar(1.0, t.phase);
            c[im] += 0.5 * s * t.amplitude * std::polar(1.0, -t.phase);
        }
        return c;
    }

    std::vector<double> samples(const SpectralBasis<D>& basis) const {
        std::vector<double> v(basis.size());
        for (std::size_t j = 0; j < basis.size(); ++j) v[j] = (*this)(basis.point(j));
        return v;
    }

private:
    static int default_samples() { return D == 1 ? 4096 : (D == 2 ? 128 : 32); }

    static double symmetric_spectral_norm(Mat<D> a) {
        if constexpr (D == 1) {
            return std::abs(a[0][0]);
        } else if constexpr (D == 2) {
            const double tr = 0.5 * (a[0][0] + a[1][1]);
            const double df = 0.5 * (a[0][0] - a[1][1]);
            const double r = std::sqrt(df * df + a[0][1] * a[0][1]);
            return std::max(std::abs(tr + r), std::abs(tr - r));
        } else {
            // cyclic Jacobi sweeps
            for (int sweep = 0; sweep < 50; ++sweep) {
                double off = 0.0;
                for (int p = 0; p < D; ++p)
                    for (int q = p + 1; q < D; ++q) off += a[p][q] * a[p][q];
                if (off < 1e-30) break;
                for (int p = 0; p < D; ++p) {
                    for (int q = p + 1; q < D; ++q) {
                        if (a[p][q] == 0.0) continue;
                        const double th = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                        const double t = (th >= 0 ? 1.0 : -1.0) / (std::abs(th) + std::sqrt(th * th + 1.0));
                        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                        for (int k = 0; k < D; ++k) {
                            const double akp = a[k][p], akq = a[k][q];
                            a[k][p] = c * akp - s * akq;
                            a[k][q] = s * akp + c * akq;
                        }
                        for (int k = 0; k < D; ++k) {
                            const double apk = a[p][k], aqk = a[q][k];
                            a[p][k] = c * apk - s * aqk;
                            a[q][k] = s * apk + c * aqk;
                        }
                    }
                }
            }
            double m = 0.0;
            for (int i = 0; i < D; ++i) m = std::max(m, std::abs(a[i][i]));
            return m;
        }
    }

    Lattice<D> lat_;
    std::vector<TrigTerm<D>> terms_;
    std::vector<Vec<D>> g_;
};

}  // namespace blochsc
