#pragma once

// Bravais lattice geometry: the half-open parallelepiped cell
//   Gamma = { sum_j t_j a_j : t_j in [-1/2, 1/2) },
// its reciprocal lattice, the cell projection P_Gamma, the boundary radii
// gamma_-/gamma_+ and the cost regularizer Theta.

#include <algorithm>
#include <limits>
#include <utility>

#include "core.hpp"

namespace blochsc {

struct CellGeometry {
    double gamma_minus = 0.0;  ///< inf of |z| over the cell boundary
    double gamma_plus = 0.0;   ///< sup of |z| over the cell boundary
};

template <int D>
struct CellProjection {
    Vec<D> point;         ///< representative in Gamma
    Vec<D> lattice_vec;   ///< z - point
    IVec<D> coords;       ///< integer coordinates of lattice_vec in the basis
};

template <int D>
class Lattice {
public:
    /// `basis[j]` is the Bravais vector a_j.
    explicit Lattice(const std::array<Vec<D>, D>& basis) : basis_(basis) {
        // to_cart_[i][j] = a_j[i]
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) to_cart_[i][j] = basis_[j][i];
        det_ = determinant<D>(to_cart_);
        double scale = 1.0;
        for (const auto& a : basis_) scale *= norm<D>(a);
        if (!(std::abs(det_) > 1e-12 * scale) || !std::isfinite(det_))
            throw DomainError("lattice basis is degenerate");
        to_lat_ = inverse<D>(to_cart_);
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) recip_[i][j] = two_pi * to_lat_[i][j];
    }

    /// Z^D scaled by `a`.
    static Lattice cubic(double a = 1.0) {
        std::array<Vec<D>, D> b{};
        for (int i = 0; i < D; ++i) {
            b[i] = zero_vec<D>();
            b[i][i] = a;
        }
        return Lattice(b);
    }

    const Vec<D>& a(int j) const { return basis_[j]; }
    /// Reciprocal vector b_i, with b_i . a_j = 2 pi delta_ij.
    Vec<D> b(int i) const {
        Vec<D> v{};
        for (int j = 0; j < D; ++j) v[j] = recip_[i][j];
        return v;
    }

    double cell_volume() const { return std::abs(det_); }
    double reciprocal_volume() const { return std::pow(two_pi, D) / cell_volume(); }

    Vec<D> to_lattice(const Vec<D>& y) const { return mat_vec<D>(to_lat_, y); }
    Vec<D> to_cartesian(const Vec<D>& t) const { return mat_vec<D>(to_cart_, t); }

    /// Cartesian G = sum_i n_i b_i.
    Vec<D> reciprocal(const Vec<D>& n) const {
        Vec<D> g = zero_vec<D>();
        for (int i = 0; i < D; ++i)
            for (int j = 0; j < D; ++j) g[j] += n[i] * recip_[i][j];
        return g;
    }

    Vec<D> lattice_vector(const IVec<D>& n) const {
        Vec<D> l = zero_vec<D>();
        for (int j = 0; j < D; ++j)
            for (int i = 0; i < D; ++i) l[i] += static_cast<double>(n[j]) * basis_[j][i];
        return l;
    }

    /// P_Gamma: unique representative of z modulo the lattice in the half-open cell.
    /// Lattice coordinates exactly at +1/2 map to -1/2.
    CellProjection<D> project(const Vec<D>& z) const {
        if (!all_finite<D>(z)) throw DomainError("project_to_cell: non-finite point");
        const Vec<D> t = to_lattice(z);
        CellProjection<D> out;
        for (int i = 0; i < D; ++i) out.coords[i] = static_cast<long>(std::floor(t[i] + 0.5));
        out.lattice_vec = lattice_vector(out.coords);
        out.point = z - out.lattice_vec;
        return out;
    }

    Vec<D> reduce(const Vec<D>& z) const { return project(z).point; }

    /// gamma_- and gamma_+ of the parallelepiped cell. gamma_+ is attained at a
    /// vertex; gamma_- is the distance to the nearest face, exact for D <= 2 and
    /// sampled (about 1e4 points per face) above.
    CellGeometry geometry() const {
        CellGeometry g;
        g.gamma_plus = 0.0;
        for (std::size_t mask = 0; mask < (std::size_t{1} << D); ++mask) {
            Vec<D> t{};
            for (int j = 0; j < D; ++j) t[j] = (mask >> j & 1U) ? 0.5 : -0.5;
            g.gamma_plus = std::max(g.gamma_plus, norm<D>(to_cartesian(t)));
        }
        g.gamma_minus = std::numeric_limits<double>::infinity();
        if constexpr (D == 1) {
            g.gamma_minus = 0.5 * std::abs(basis_[0][0]);
        } else if constexpr (D == 2) {
            for (int i = 0; i < 2; ++i) {
                const int j = 1 - i;
                for (double s : {-0.5, 0.5}) {
                    const Vec<D> c = s * basis_[i];
                    g.gamma_minus = std::min(g.gamma_minus, segment_distance(c, basis_[j]));
                }
            }
        } else {
            const std::size_t per_axis = static_cast<std::size_t>(
                std::ceil(std::pow(1.0e4, 1.0 / static_cast<double>(D - 1))));
            for (int i = 0; i < D; ++i) {
                for (double s : {-0.5, 0.5}) {
                    for_each_index<D - 1>(per_axis + 1, [&](std::size_t, const auto& idx) {
                        Vec<D> t{};
                        int m = 0;
                        for (int j = 0; j < D; ++j) {
                            if (j == i) {
                                t[j] = s;
                            } else {
                                t[j] = -0.5 + static_cast<double>(idx[m++]) / static_cast<double>(per_axis);
                            }
                        }
                        g.gamma_minus = std::min(g.gamma_minus, norm<D>(to_cartesian(t)));
                    });
                }
            }
        }
        return g;
    }

private:
    // Distance from the origin to the segment { c + s e : s in [-1/2, 1/2] }.
    static double segment_distance(const Vec<D>& c, const Vec<D>& e) {
        const double ee = norm2<D>(e);
        double s = -dot<D>(c, e) / ee;
        s = std::clamp(s, -0.5, 0.5);
        return norm<D>(c + s * e);
    }

    std::array<Vec<D>, D> basis_;
    Mat<D> to_cart_{};
    Mat<D> to_lat_{};
    Mat<D> recip_{};
    double det_ = 0.0;
};

template <int D>
CellProjection<D> project_to_cell(const Vec<D>& z, const Lattice<D>& lat) { return lat.project(z); }

template <int D>
CellGeometry gamma_bounds(const Lattice<D>& lat) { return lat.geometry(); }

/// Theta(r) = int_0^r (1 - s / gamma_-)_+ ds.
inline double theta(double r, const CellGeometry& geom) {
    if (!(r >= 0.0)) throw DomainError("theta: argument must be nonnegative");
    const double gm = geom.gamma_minus;
    if (r <= gm) return r - r * r / (2.0 * gm);
    return 0.5 * gm;
}

inline double theta_prime(double r, const CellGeometry& geom) {
    if (!(r >= 0.0)) throw DomainError("theta_prime: argument must be nonnegative");
    return std::max(0.0, 1.0 - r / geom.gamma_minus);
}

}  // namespace blochsc
