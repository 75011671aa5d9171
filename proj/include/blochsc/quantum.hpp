#pragma once

// Fiber Hamiltonians H_k = (1/2)(-i hbar grad + hbar k)^2 + V, split-step
// propagation u -> exp(-i t H_k / hbar) u, von Neumann evolution of low-rank
// fibered densities, and residuals of the commutator identities used by the
// stability argument.
//
// Sign convention: R(t) = U(t)^* R U(t) with U(t) = exp(i t H / hbar), so every
// low-rank factor evolves as v(t) = exp(-i t H_k / hbar) v.

#include <boost/math/quadrature/gauss.hpp>

#include "potential.hpp"
#include "quantization.hpp"

namespace blochsc {

template <int D>
class FiberHamiltonian {
public:
    FiberHamiltonian(BasisPtr<D> basis, const Vec<D>& k, TrigPotential<D> V, double hbar)
        : basis_(std::move(basis)), k_(k), V_(std::move(V)), hbar_(hbar) {
        if (!(hbar > 0.0)) throw DomainError("FiberHamiltonian: hbar must be positive");
        kin_.resize(basis_->size());
        for (std::size_t i = 0; i < kin_.size(); ++i) kin_[i] = 0.5 * hbar_ * hbar_ * norm2<D>(basis_->G(i) + k_);
        vgrid_ = V_.samples(*basis_);
    }

    const BasisPtr<D>& basis() const { return basis_; }
    const Vec<D>& k() const { return k_; }
    double hbar() const { return hbar_; }
    const TrigPotential<D>& potential() const { return V_; }
    /// hbar^2 |G + k|^2 / 2 per plane wave.
    const std::vector<double>& kinetic() const { return kin_; }
    const std::vector<double>& potential_samples() const { return vgrid_; }

    /// H_k u with V applied on the position grid.
    PeriodicField<D> apply(const PeriodicField<D>& u) const {
        PeriodicField<D> out(basis_);
        std::vector<cplx> s, c;
        basis_->to_samples(u.c, s);
        for (std::size_t j = 0; j < s.size(); ++j) s[j] *= vgrid_[j];
        basis_->to_coeffs(s, c);
        for (std::size_t i = 0; i < c.size(); ++i) out.c[i] = kin_[i] * u.c[i] + c[i];
        return out;
    }

private:
    BasisPtr<D> basis_;
    Vec<D> k_;
    TrigPotential<D> V_;
    double hbar_;
    std::vector<double> kin_;
    std::vector<double> vgrid_;
};

/// Strang splitting K(h/2) P(h) K(h/2) with the kinetic factor diagonal in
/// plane waves and the potential factor diagonal on the grid. Consecutive
/// kinetic half steps are fused. With V = 0 the propagator is exact in one step.
template <int D>
class FiberPropagator {
public:
    FiberPropagator(const FiberHamiltonian<D>& H, double h) : H_(&H), h_(h) {
        const auto& kin = H.kinetic();
        half_.resize(kin.size());
        full_.resize(kin.size());
        for (std::size_t i = 0; i < kin.size(); ++i) {
            half_[i] = std::polar(1.0, -0.5 * h * kin[i] / H.hbar());
            full_[i] = std::polar(1.0, -h * kin[i] / H.hbar());
        }
        const auto& v = H.potential_samples();
        pot_.resize(v.size());
        for (std::size_t j = 0; j < v.size(); ++j) pot_[j] = std::polar(1.0, -h * v[j] / H.hbar());
    }

    /// n steps of size h.
    void advance(PeriodicField<D>& u, long n) const {
        if (n <= 0) return;
        const auto& basis = *H_->basis();
        if (H_->potential().empty()) {
            const auto& kin = H_->kinetic();
            const double t = h_ * static_cast<double>(n);
            for (std::size_t i = 0; i < u.c.size(); ++i) u.c[i] *= std::polar(1.0, -t * kin[i] / H_->hbar());
            return;
        }
        std::vector<cplx> s;
        for (std::size_t i = 0; i < u.c.size(); ++i) u.c[i] *= half_[i];
        for (long step = 0; step < n; ++step) {
            basis.to_samples(u.c, s);
            for (std::size_t j = 0; j < s.size(); ++j) s[j] *= pot_[j];
            basis.to_coeffs(s, u.c);
            const auto& f = (step + 1 == n) ? half_ : full_;
            for (std::size_t i = 0; i < u.c.size(); ++i) u.c[i] *= f[i];
        }
    }

    double step() const { return h_; }

private:
    const FiberHamiltonian<D>* H_;
    double h_;
    std::vector<cplx> half_, full_, pot_;
};

/// exp(-i t H_k / hbar) u by Strang splitting with ceil(|t|/dt) equal steps.
template <int D>
PeriodicField<D> propagate_fiber(const PeriodicField<D>& u, const FiberHamiltonian<D>& H, double t, double dt) {
    const long n = detail::step_count(t, dt);
    PeriodicField<D> out = u;
    if (n == 0) return out;
    FiberPropagator<D> P(H, t / static_cast<double>(n));
    P.advance(out, n);
    return out;
}

/// R(t) = U(t)^* R U(t): each factor v -> exp(-i t H_k / hbar) v, weights unchanged.
template <int D>
FiberedDensity<D> evolve_density(const FiberedDensity<D>& R, double t, const TrigPotential<D>& V, double dt) {
    const long n = detail::step_count(t, dt);
    FiberedDensity<D> out = R;
    if (n == 0) return out;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(R.fibers.size()); ++i) {
        const auto ii = static_cast<std::size_t>(i);
        FiberHamiltonian<D> H(R.basis, R.grid.points[ii], V, R.hbar);
        FiberPropagator<D> P(H, t / static_cast<double>(n));
        for (auto& v : out.fibers[ii].v) P.advance(v, n);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Commutator identities

/// Exact product V u in coefficient space on `target` (band of u plus band of V
/// must fit, otherwise AccuracyError).
template <int D>
PeriodicField<D> multiply_potential(const TrigPotential<D>& V, const PeriodicField<D>& u, const BasisPtr<D>& target) {
    PeriodicField<D> out(target);
    for (const auto& term : V.terms()) {
        const bool flat = term.n == IVec<D>{};
        for (int sgn : {1, -1}) {
            // a constant term a cos(phi) is applied once with its full value
            const cplx f = flat ? cplx{term.amplitude * std::cos(term.phase), 0.0}
                                : 0.5 * term.amplitude * std::polar(1.0, sgn * term.phase);
            for (std::size_t i = 0; i < u.c.size(); ++i) {
                if (u.c[i] == cplx{0.0, 0.0}) continue;
                IVec<D> n = u.basis->index(i);
                for (int a = 0; a < D; ++a) n[a] += sgn * term.n[a];
                const std::size_t j = target->flat_of(n);
                if (j >= target->size()) throw AccuracyError("multiply_potential: product leaves the band");
                out.c[j] += f * u.c[i];
            }
            if (flat) break;
        }
    }
    return out;
}

/// Exact product (d_a V) u, with d_a V = sum c G_a (i/2)(e^{i phi} e^{iGx} - e^{-i phi} e^{-iGx}).
template <int D>
PeriodicField<D> multiply_potential_gradient(const TrigPotential<D>& V, int axis, const PeriodicField<D>& u,
                                             const BasisPtr<D>& target) {
    PeriodicField<D> out(target);
    for (const auto& term : V.terms()) {
        Vec<D> nd{};
        for (int a = 0; a < D; ++a) nd[a] = static_cast<double>(term.n[a]);
        const double Ga = V.lattice().reciprocal(nd)[axis];
        if (Ga == 0.0) continue;
        for (int sgn : {1, -1}) {
            const cplx f = cplx{0.0, 0.5 * sgn} * term.amplitude * Ga * std::polar(1.0, sgn * term.phase);
            for (std::size_t i = 0; i < u.c.size(); ++i) {
                if (u.c[i] == cplx{0.0, 0.0}) continue;
                IVec<D> n = u.basis->index(i);
                for (int a = 0; a < D; ++a) n[a] += sgn * term.n[a];
                const std::size_t j = target->flat_of(n);
                if (j >= target->size()) throw AccuracyError("multiply_potential_gradient: product leaves the band");
                out.c[j] += f * u.c[i];
            }
        }
    }
    return out;
}

/// Fourier multiplier: coefficient G is scaled by symbol(G).
template <int D, class F>
PeriodicField<D> fourier_multiply(const PeriodicField<D>& u, F&& symbol) {
    PeriodicField<D> out = u;
    for (std::size_t i = 0; i < out.c.size(); ++i) out.c[i] *= symbol(u.basis->G(i));
    return out;
}

struct Residual {
    double abs = 0.0;    ///< l2 norm of the coefficient residual
    double scale = 0.0;  ///< l2 norm of the right-hand side
    double rel() const { return scale > 0.0 ? abs / scale : abs; }
};

/// || (i/hbar)[V, (xi + i hbar grad)^2] u - ((xi + i hbar grad).grad V + grad V.(xi + i hbar grad)) u ||,
/// evaluated exactly in coefficient space on an enlarged band.
template <int D>
Residual commutator_residual_potential(const TrigPotential<D>& V, const Vec<D>& xi, double hbar,
                                       const PeriodicField<D>& u) {
    // constant terms commute with every Fourier multiplier and have no gradient
    std::vector<TrigTerm<D>> varying;
    for (const auto& t : V.terms())
        if (!(t.n == IVec<D>{})) varying.push_back(t);
    const TrigPotential<D> W(V.lattice(), varying);
    const auto big = SpectralBasis<D>::make(u.basis->lattice(), u.basis->M() + static_cast<int>(V.band()));
    const PeriodicField<D> ub = rebase<D>(u, big);
    auto Da = [&](int a) { return [&, a](const Vec<D>& G) { return cplx{xi[a] - hbar * G[a], 0.0}; }; };
    auto D2 = [&](const Vec<D>& G) { return cplx{norm2<D>(xi - hbar * G), 0.0}; };

    const auto VD2u = multiply_potential<D>(W, fourier_multiply<D>(ub, D2), big);
    const auto D2Vu = fourier_multiply<D>(multiply_potential<D>(W, ub, big), D2);
    PeriodicField<D> rhs(big);
    for (int a = 0; a < D; ++a) {
        rhs += fourier_multiply<D>(multiply_potential_gradient<D>(W, a, ub, big), Da(a));
        rhs += multiply_potential_gradient<D>(W, a, fourier_multiply<D>(ub, Da(a)), big);
    }
    Residual r;
    double s = 0.0, t = 0.0;
    for (std::size_t i = 0; i < big->size(); ++i) {
        const cplx lhs = cplx{0.0, 1.0 / hbar} * (VD2u.c[i] - D2Vu.c[i]);
        s += std::norm(lhs - rhs.c[i]);
        t += std::norm(rhs.c[i]);
    }
    r.abs = std::sqrt(s);
    r.scale = std::sqrt(t);
    return r;
}

namespace detail {

/// Applies a (rows x cols) matrix along one axis of a row-major tensor.
inline std::vector<cplx> apply_axis(const std::vector<cplx>& in, std::vector<std::size_t>& dims, std::size_t axis,
                                    const std::vector<cplx>& mat, std::size_t rows) {
    const std::size_t cols = dims[axis];
    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= dims[a];
    for (std::size_t a = axis + 1; a < dims.size(); ++a) inner *= dims[a];
    std::vector<cplx> out(outer * rows * inner, cplx{0.0, 0.0});
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                const cplx m = mat[r * cols + c];
                const cplx* src = &in[(o * cols + c) * inner];
                cplx* dst = &out[(o * rows + r) * inner];
                for (std::size_t i = 0; i < inner; ++i) dst[i] += m * src[i];
            }
    dims[axis] = rows;
    return out;
}

/// Composite Gauss-Legendre rule on [-1/2, 1/2].
inline void gauss_panels(int panels, std::vector<double>& nodes, std::vector<double>& weights) {
    using GL = boost::math::quadrature::gauss<double, 20>;
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    nodes.clear();
    weights.clear();
    const double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = -0.5 + (p + 0.5) * h;
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (int sgn : {-1, 1}) {
                if (x[i] == 0.0 && sgn > 0) continue;
                nodes.push_back(mid + 0.5 * h * sgn * x[i]);
                weights.push_back(0.5 * h * w[i]);
            }
        }
    }
}

}  // namespace detail

/// Fourier coefficients (g s)_G, |n|_inf <= M_out, of the product of a field s
/// with a bounded multiplier g(t) given in lattice coordinates t of the
/// translated cell x + A [-1/2, 1/2)^D. The integrand is smooth on that cell
/// whenever g is, so tensor Gauss-Legendre panels converge spectrally.
template <int D>
class ShiftedCellQuadrature {
public:
    ShiftedCellQuadrature(const SpectralBasis<D>& in, const BasisPtr<D>& out, const Vec<D>& x, int panels)
        : in_(&in), out_(out), x_(x) {
        detail::gauss_panels(panels, t_, w_);
        const std::size_t nt = t_.size();
        const int Nin = in.N(), Nout = out->N();
        eval_.resize(nt * static_cast<std::size_t>(Nin));
        for (std::size_t r = 0; r < nt; ++r)
            for (int m = 0; m < Nin; ++m)
                eval_[r * static_cast<std::size_t>(Nin) + static_cast<std::size_t>(m)] =
                    std::polar(1.0, two_pi * static_cast<double>(in.signed_of(static_cast<std::size_t>(m))) * t_[r]);
        proj_.resize(static_cast<std::size_t>(Nout) * nt);
        for (int m = 0; m < Nout; ++m)
            for (std::size_t c = 0; c < nt; ++c)
                proj_[static_cast<std::size_t>(m) * nt + c] =
                    w_[c] * std::polar(1.0, -two_pi * static_cast<double>(out->signed_of(static_cast<std::size_t>(m))) * t_[c]);
    }

    std::size_t nodes_per_axis() const { return t_.size(); }

    /// Values of the field at every tensor node, row-major over axes.
    std::vector<cplx> evaluate(const PeriodicField<D>& s) const {
        std::vector<cplx> c(s.c.size());
        const double inv = 1.0 / std::sqrt(in_->cell_volume());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double ph = dot<D>(in_->G(i), x_);
            c[i] = s.c[i] * std::polar(inv, ph);
        }
        std::vector<std::size_t> dims(D, static_cast<std::size_t>(in_->N()));
        for (int a = 0; a < D; ++a) c = detail::apply_axis(c, dims, static_cast<std::size_t>(a), eval_, t_.size());
        return c;
    }

    /// Coefficients on the output band of the product g * s, given node values of both.
    PeriodicField<D> project(const std::vector<cplx>& values) const {
        std::vector<cplx> c = values;
        std::vector<std::size_t> dims(D, t_.size());
        for (int a = 0; a < D; ++a)
            c = detail::apply_axis(c, dims, static_cast<std::size_t>(a), proj_, static_cast<std::size_t>(out_->N()));
        PeriodicField<D> f(out_);
        const double scale = std::sqrt(out_->cell_volume());
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double ph = -dot<D>(out_->G(i), x_);
            f.c[i] = c[i] * std::polar(scale, ph);
        }
        return f;
    }

    /// Lattice coordinates of a flat node index.
    Vec<D> node(std::size_t flat) const {
        Vec<D> t{};
        for (int a = D - 1; a >= 0; --a) {
            t[a] = t_[flat % t_.size()];
            flat /= t_.size();
        }
        return t;
    }

    std::size_t size() const { return ipow(t_.size(), D); }

private:
    const SpectralBasis<D>* in_;
    BasisPtr<D> out_;
    Vec<D> x_;
    std::vector<double> t_, w_;
    std::vector<cplx> eval_, proj_;
};

/// Weak-form residual of
///   (i/hbar)[ (1/2)(-i hbar grad + hbar k)^2, lambda^2 W ] = lambda^2 (Q.A + A.Q),
/// W(y) = Theta(|P(x-y)|^2), A(y) = Theta'(|P(x-y)|^2) P(y-x), Q = -i hbar grad + hbar k.
/// W is only Lipschitz (its gradient jumps across the cell boundary around x), so
/// the identity is tested against every plane wave of the band of u: both sides
/// need no derivative of W once the kinetic operator is moved onto the test function.
template <int D>
Residual commutator_residual_theta(const Vec<D>& x, const Vec<D>& k, double lambda, double hbar,
                                   const CellGeometry& geom, const PeriodicField<D>& u, int panels = 0) {
    const auto& in = *u.basis;
    const auto out = u.basis;
    if (panels <= 0) panels = in.M() + 8;
    ShiftedCellQuadrature<D> Q(in, out, x, panels);
    const auto& lat = in.lattice();
    const std::size_t nn = Q.size();
    std::vector<double> W(nn);
    std::vector<Vec<D>> A(nn);
    for (std::size_t j = 0; j < nn; ++j) {
        const Vec<D> z = lat.to_cartesian(Q.node(j));  // y - x = P(y - x) on the shifted cell
        const double r = norm2<D>(z);
        W[j] = theta(r, geom);
        A[j] = theta_prime(r, geom) * z;
    }
    const double l2 = lambda * lambda;
    auto kin = [&](const Vec<D>& G) { return cplx{0.5 * hbar * hbar * norm2<D>(G + k), 0.0}; };
    auto qa = [&](int a) { return [&, a](const Vec<D>& G) { return cplx{hbar * (G[a] + k[a]), 0.0}; }; };

    auto times = [&](const std::vector<cplx>& s, auto&& g) {
        std::vector<cplx> v(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) v[j] = g(j) * s[j];
        return v;
    };
    const auto su = Q.evaluate(u);
    const auto sKu = Q.evaluate(fourier_multiply<D>(u, kin));
    const auto Wu = Q.project(times(su, [&](std::size_t j) { return W[j]; }));
    const auto WKu = Q.project(times(sKu, [&](std::size_t j) { return W[j]; }));
    PeriodicField<D> lhs(out);
    for (std::size_t i = 0; i < lhs.c.size(); ++i)
        lhs.c[i] = cplx{0.0, l2 / hbar} * (kin(out->G(i)) * Wu.c[i] - WKu.c[i]);

    PeriodicField<D> rhs(out);
    for (int a = 0; a < D; ++a) {
        const auto Au = Q.project(times(su, [&](std::size_t j) { return A[j][a]; }));
        const auto sQu = Q.evaluate(fourier_multiply<D>(u, qa(a)));
        const auto AQu = Q.project(times(sQu, [&](std::size_t j) { return A[j][a]; }));
        for (std::size_t i = 0; i < rhs.c.size(); ++i)
            rhs.c[i] += l2 * (qa(a)(out->G(i)) * Au.c[i] + AQu.c[i]);
    }
    Residual r;
    double s = 0.0, t = 0.0;
    for (std::size_t i = 0; i < rhs.c.size(); ++i) {
        s += std::norm(lhs.c[i] - rhs.c[i]);
        t += std::norm(rhs.c[i]);
    }
    r.abs = std::sqrt(s);
    r.scale = std::sqrt(t);
    return r;
}

/// Multiplication operator stored by its grid symbol; composition multiplies symbols.
template <int D>
struct GridMultiplier {
    BasisPtr<D> basis;
    std::vector<double> symbol;

    GridMultiplier compose(const GridMultiplier& o) const {
        GridMultiplier r{basis, symbol};
        for (std::size_t j = 0; j < symbol.size(); ++j) r.symbol[j] = symbol[j] * o.symbol[j];
        return r;
    }
    PeriodicField<D> apply(const PeriodicField<D>& u) const {
        std::vector<cplx> s;
        basis->to_samples(u.c, s);
        for (std::size_t j = 0; j < s.size(); ++j) s[j] *= symbol[j];
        return PeriodicField<D>::from_samples(basis, s);
    }
};

/// Fourier multiplier stored by its symbol on the band; composition multiplies symbols.
template <int D>
struct FourierMultiplier {
    BasisPtr<D> basis;
    std::vector<double> symbol;

    FourierMultiplier compose(const FourierMultiplier& o) const {
        FourierMultiplier r{basis, symbol};
        for (std::size_t j = 0; j < symbol.size(); ++j) r.symbol[j] = symbol[j] * o.symbol[j];
        return r;
    }
    PeriodicField<D> apply(const PeriodicField<D>& u) const {
        PeriodicField<D> out = u;
        for (std::size_t j = 0; j < symbol.size(); ++j) out.c[j] *= symbol[j];
        return out;
    }
};

/// ||[A, B] u|| for two operators of the same diagonal family, from composed symbols.
template <class Op, int D>
double diagonal_commutator_residual(const Op& A, const Op& B, const PeriodicField<D>& u) {
    const auto ab = A.compose(B).apply(u);
    const auto ba = B.compose(A).apply(u);
    double s = 0.0;
    for (std::size_t i = 0; i < ab.c.size(); ++i) s += std::norm(ab.c[i] - ba.c[i]);
    return std::sqrt(s);
}

/// lambda^2 Theta(|P(x - y_j)|^2) on the grid.
template <int D>
GridMultiplier<D> theta_multiplier(const BasisPtr<D>& basis, const Vec<D>& x, double lambda, const CellGeometry& geom) {
    GridMultiplier<D> m{basis, std::vector<double>(basis->size())};
    const auto& lat = basis->lattice();
    for (std::size_t j = 0; j < basis->size(); ++j)
        m.symbol[j] = lambda * lambda * theta(norm2<D>(lat.reduce(x - basis->point(j))), geom);
    return m;
}

template <int D>
GridMultiplier<D> potential_multiplier(const BasisPtr<D>& basis, const TrigPotential<D>& V) {
    return {basis, V.samples(*basis)};
}

}  // namespace blochsc
