#pragma once

// Plane-wave representation of L-periodic functions,
//   phi(y) = sum_{|n|_inf <= M} c_n exp(i G_n . y) / sqrt(|Gamma|),  G_n = sum_i n_i b_i,
// together with the matching uniform position grid of N = 2M+1 points per axis.
//
// Coefficients are stored in FFT order on every axis: storage index m holds
// n = m for m <= M and n = m - N otherwise. Grid point j sits at lattice
// coordinates t = s(j) / N with the same signed map s, so the grid is
// symmetric about the origin and contains it.

#include <algorithm>
#include <memory>
#include <vector>

#include "fft.hpp"
#include "lattice.hpp"

namespace blochsc {

template <int D>
class SpectralBasis {
public:
    SpectralBasis(const Lattice<D>& lat, int M) : lat_(lat), M_(M), N_(2 * M + 1) {
        if (M < 1) throw DomainError("plane-wave order M must be at least 1");
        size_ = ipow(static_cast<std::size_t>(N_), D);
        g_.resize(size_);
        y_.resize(size_);
        for_each_index<D>(static_cast<std::size_t>(N_), [&](std::size_t flat, const auto& idx) {
            Vec<D> n{}, t{};
            for (int a = 0; a < D; ++a) {
                const double s = static_cast<double>(signed_of(idx[a]));
                n[a] = s;
                t[a] = s / static_cast<double>(N_);
            }
            g_[flat] = lat_.reciprocal(n);
            y_[flat] = lat_.to_cartesian(t);
        });
    }

    static std::shared_ptr<const SpectralBasis> make(const Lattice<D>& lat, int M) {
        return std::make_shared<const SpectralBasis>(lat, M);
    }

    const Lattice<D>& lattice() const { return lat_; }
    int M() const { return M_; }
    int N() const { return N_; }
    std::size_t size() const { return size_; }
    double cell_volume() const { return lat_.cell_volume(); }
    /// Quadrature weight of one grid point, |Gamma| / N^D.
    double point_weight() const { return lat_.cell_volume() / static_cast<double>(size_); }

    long signed_of(std::size_t m) const {
        const long mm = static_cast<long>(m);
        return mm <= M_ ? mm : mm - N_;
    }

    IVec<D> index(std::size_t flat) const {
        IVec<D> n{};
        for (int a = D - 1; a >= 0; --a) {
            n[a] = signed_of(flat % static_cast<std::size_t>(N_));
            flat /= static_cast<std::size_t>(N_);
        }
        return n;
    }

    /// Flat storage position of the integer frequency n, or size() if outside the band.
    std::size_t flat_of(const IVec<D>& n) const {
        std::size_t flat = 0;
        for (int a = 0; a < D; ++a) {
            if (n[a] > M_ || n[a] < -M_) return size_;
            const long m = n[a] >= 0 ? n[a] : n[a] + N_;
            flat = flat * static_cast<std::size_t>(N_) + static_cast<std::size_t>(m);
        }
        return flat;
    }

    /// Largest |n|_inf of the storage slot.
    long shell(std::size_t flat) const {
        long s = 0;
        for (long v : index(flat)) s = std::max(s, std::abs(v));
        return s;
    }

    const Vec<D>& G(std::size_t flat) const { return g_[flat]; }
    const Vec<D>& point(std::size_t flat) const { return y_[flat]; }
    const std::vector<Vec<D>>& frequencies() const { return g_; }
    const std::vector<Vec<D>>& points() const { return y_; }

    /// Grid values phi(y_j) from coefficients.
    void to_samples(const std::vector<cplx>& coeffs, std::vector<cplx>& samples) const {
        fft::backward<D>(coeffs, samples, N_);
        const double s = 1.0 / std::sqrt(cell_volume());
        for (auto& v : samples) v *= s;
    }

    /// Coefficients from grid values; exact for fields inside the band.
    void to_coeffs(const std::vector<cplx>& samples, std::vector<cplx>& coeffs) const {
        fft::forward<D>(samples, coeffs, N_);
        const double s = std::sqrt(cell_volume()) / static_cast<double>(size_);
        for (auto& v : coeffs) v *= s;
    }

private:
    Lattice<D> lat_;
    int M_;
    int N_;
    std::size_t size_ = 0;
    std::vector<Vec<D>> g_;
    std::vector<Vec<D>> y_;
};

template <int D>
using BasisPtr = std::shared_ptr<const SpectralBasis<D>>;

/// Element of L^2_per(Gamma) in the plane-wave basis.
template <int D>
struct PeriodicField {
    BasisPtr<D> basis;
    std::vector<cplx> c;

    PeriodicField() = default;
    explicit PeriodicField(BasisPtr<D> b) : basis(std::move(b)), c(basis->size(), cplx{0.0, 0.0}) {}
    PeriodicField(BasisPtr<D> b, std::vector<cplx> coeffs) : basis(std::move(b)), c(std::move(coeffs)) {
        if (c.size() != basis->size()) throw DomainError("coefficient array does not match basis");
    }

    static PeriodicField from_samples(BasisPtr<D> b, const std::vector<cplx>& samples) {
        PeriodicField f(b);
        b->to_coeffs(samples, f.c);
        return f;
    }

    /// Constant function with unit L^2_per norm.
    static PeriodicField constant(BasisPtr<D> b) {
        PeriodicField f(b);
        f.c[0] = 1.0;
        return f;
    }

    /// Plane wave e_G for integer frequency n.
    static PeriodicField plane_wave(BasisPtr<D> b, const IVec<D>& n) {
        PeriodicField f(b);
        const std::size_t i = b->flat_of(n);
        if (i >= b->size()) throw DomainError("plane wave outside the band");
        f.c[i] = 1.0;
        return f;
    }

    std::vector<cplx> samples() const {
        std::vector<cplx> s;
        basis->to_samples(c, s);
        return s;
    }

    double norm2() const {
        double s = 0.0;
        for (const auto& v : c) s += std::norm(v);
        return s;
    }
    double norm() const { return std::sqrt(norm2()); }

    /// Direct evaluation at an arbitrary point (O(size) per call).
    cplx operator()(const Vec<D>& y) const {
        cplx s{0.0, 0.0};
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c[i] == cplx{0.0, 0.0}) continue;
            const double ph = dot<D>(basis->G(i), y);
            s += c[i] * cplx{std::cos(ph), std::sin(ph)};
        }
        return s / std::sqrt(basis->cell_volume());
    }

    PeriodicField& operator*=(cplx s) {
        for (auto& v : c) v *= s;
        return *this;
    }
    PeriodicField& operator+=(const PeriodicField& o) {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
        return *this;
    }
    PeriodicField& operator-=(const PeriodicField& o) {
        for (std::size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
        return *this;
    }
};

/// <u|v>, antilinear in u.
template <int D>
cplx inner(const PeriodicField<D>& u, const PeriodicField<D>& v) {
    cplx s{0.0, 0.0};
    for (std::size_t i = 0; i < u.c.size(); ++i) s += std::conj(u.c[i]) * v.c[i];
    return s;
}

template <int D>
double max_abs_diff(const PeriodicField<D>& u, const PeriodicField<D>& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < u.c.size(); ++i) m = std::max(m, std::abs(u.c[i] - v.c[i]));
    return m;
}

/// Largest coefficient magnitude on the outermost shell |n|_inf = M, relative
/// to the largest coefficient overall. A band-limited field gives 0.
template <int D>
double band_tail(const PeriodicField<D>& u) {
    double edge = 0.0, all = 0.0;
    const long M = u.basis->M();
    for (std::size_t i = 0; i < u.c.size(); ++i) {
        const double a = std::abs(u.c[i]);
        all = std::max(all, a);
        if (u.basis->shell(i) == M) edge = std::max(edge, a);
    }
    return all > 0.0 ? edge / all : 0.0;
}

/// Copies the coefficients of u into another band (truncating or zero-padding).
template <int D>
PeriodicField<D> rebase(const PeriodicField<D>& u, BasisPtr<D> target) {
    PeriodicField<D> out(target);
    for (std::size_t i = 0; i < u.c.size(); ++i) {
        const std::size_t j = target->flat_of(u.basis->index(i));
        if (j < target->size()) out.c[j] = u.c[i];
    }
    return out;
}

}  // namespace blochsc
