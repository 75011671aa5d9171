#pragma once
// Shared helpers for the test suite: lattices, dense matrix oracles.
#include <Eigen/Dense>
#include <random>

#include <blochsc/blochsc.hpp>

namespace testutil {

using namespace blochsc;

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline Lattice<1> unit1() { return Lattice<1>::cubic(); }
inline Lattice<2> unit2() { return Lattice<2>::cubic(); }

template <int D>
CVec to_eigen(const PeriodicField<D>& u) {
    CVec v(static_cast<Eigen::Index>(u.c.size()));
    for (std::size_t i = 0; i < u.c.size(); ++i) v[static_cast<Eigen::Index>(i)] = u.c[i];
    return v;
}

template <int D>
PeriodicField<D> from_eigen(const BasisPtr<D>& b, const CVec& v) {
    PeriodicField<D> u(b);
    for (std::size_t i = 0; i < u.c.size(); ++i) u.c[i] = v[static_cast<Eigen::Index>(i)];
    return u;
}

/// Galerkin matrix of multiplication by V in the plane-wave basis, built from
/// the cosine terms directly: <e_n | V e_m> = sum over terms with n - m = +-G.
template <int D>
CMat potential_matrix(const SpectralBasis<D>& b, const TrigPotential<D>& V) {
    const auto n = static_cast<Eigen::Index>(b.size());
    CMat A = CMat::Zero(n, n);
    for (std::size_t r = 0; r < b.size(); ++r)
        for (std::size_t c = 0; c < b.size(); ++c) {
            const IVec<D> nr = b.index(r), nc = b.index(c);
            for (const auto& t : V.terms()) {
                bool plus = true, minus = true;
                for (int a = 0; a < D; ++a) {
                    plus = plus && (nr[a] - nc[a] == t.n[a]);
                    minus = minus && (nr[a] - nc[a] == -t.n[a]);
                }
                if (plus) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += 0.5 * t.amplitude * std::polar(1.0, t.phase);
                if (minus) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) += 0.5 * t.amplitude * std::polar(1.0, -t.phase);
            }
        }
    return A;
}

/// Dense fiber Hamiltonian hbar^2 |G + k|^2 / 2 + V.
template <int D>
CMat hamiltonian_matrix(const SpectralBasis<D>& b, const Vec<D>& k, const TrigPotential<D>& V, double hbar) {
    CMat H = potential_matrix<D>(b, V);
    for (std::size_t i = 0; i < b.size(); ++i)
        H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += 0.5 * hbar * hbar * norm2<D>(b.G(i) + k);
    return H;
}

/// exp(-i t H / hbar) from an eigendecomposition.
inline CMat unitary(const CMat& H, double t, double hbar) {
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    CVec ph(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = std::polar(1.0, -t * es.eigenvalues()[i] / hbar);
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

/// Dense R_k = sum lambda_m |v_m><v_m| in coefficient space.
template <int D>
CMat fiber_matrix(const DensityFiber<D>& f) {
    const auto n = static_cast<Eigen::Index>(f.v.front().c.size());
    CMat R = CMat::Zero(n, n);
    for (std::size_t m = 0; m < f.rank(); ++m) {
        const CVec v = to_eigen(f.v[m]);
        R += f.lambda[m] * v * v.adjoint();
    }
    return R;
}

/// Smooth band-limited test field with Gaussian-decaying random coefficients.
template <int D>
PeriodicField<D> smooth_field(const BasisPtr<D>& b, std::mt19937_64& rng, double decay = 0.15) {
    std::normal_distribution<double> g;
    PeriodicField<D> u(b);
    for (std::size_t i = 0; i < u.c.size(); ++i) {
        double s = 0.0;
        for (long v : b->index(i)) s += static_cast<double>(v * v);
        u.c[i] = cplx{g(rng), g(rng)} * std::exp(-decay * s);
    }
    for (std::size_t i = 0; i < u.c.size(); ++i)
        if (b->shell(i) > b->M() - 4) u.c[i] = 0.0;
    u *= 1.0 / u.norm();
    return u;
}

}  // namespace testutil
