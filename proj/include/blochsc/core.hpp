#pragma once

// Small fixed-dimension vector algebra, index helpers and the error types
// shared by every module.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace blochsc {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Precondition violated by an argument (negative radius, empty grid, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A discretization knob is too coarse for the requested tolerance
/// (translate window too small, plane-wave band truncates a state, ...).
class AccuracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <int D>
using Vec = std::array<double, D>;

template <int D>
using IVec = std::array<long, D>;

/// Row-major D x D matrix.
template <int D>
using Mat = std::array<std::array<double, D>, D>;

template <int D>
constexpr double dot(const Vec<D>& a, const Vec<D>& b) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += a[i] * b[i];
    return s;
}

template <int D>
constexpr double norm2(const Vec<D>& a) { return dot<D>(a, a); }

template <int D>
inline double norm(const Vec<D>& a) { return std::sqrt(norm2<D>(a)); }

// Operators are templated on the array extent so that deduction works on
// std::array<double, N> directly.
template <std::size_t N>
constexpr std::array<double, N> operator+(std::array<double, N> a, const std::array<double, N>& b) {
    for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
    return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator-(std::array<double, N> a, const std::array<double, N>& b) {
    for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
    return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator-(std::array<double, N> a) {
    for (std::size_t i = 0; i < N; ++i) a[i] = -a[i];
    return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator*(double s, std::array<double, N> a) {
    for (std::size_t i = 0; i < N; ++i) a[i] *= s;
    return a;
}

template <int D>
constexpr Vec<D> zero_vec() {
    Vec<D> v{};
    v.fill(0.0);
    return v;
}

template <int D>
inline bool all_finite(const Vec<D>& a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

/// y = A x for a row-major matrix.
template <int D>
constexpr Vec<D> mat_vec(const Mat<D>& a, const Vec<D>& x) {
    Vec<D> y{};
    for (int i = 0; i < D; ++i) {
        y[i] = 0.0;
        for (int j = 0; j < D; ++j) y[i] += a[i][j] * x[j];
    }
    return y;
}

template <int D>
constexpr Mat<D> transpose(const Mat<D>& a) {
    Mat<D> t{};
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) t[i][j] = a[j][i];
    return t;
}

/// Determinant and inverse by Gauss-Jordan with partial pivoting.
template <int D>
double determinant(Mat<D> a) {
    double det = 1.0;
    for (int c = 0; c < D; ++c) {
        int piv = c;
        for (int r = c + 1; r < D; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (a[piv][c] == 0.0) return 0.0;
        if (piv != c) {
            std::swap(a[piv], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (int r = c + 1; r < D; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < D; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return det;
}

template <int D>
Mat<D> inverse(Mat<D> a) {
    Mat<D> inv{};
    for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) inv[i][j] = (i == j) ? 1.0 : 0.0;
    for (int c = 0; c < D; ++c) {
        int piv = c;
        for (int r = c + 1; r < D; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (a[piv][c] == 0.0) throw DomainError("singular matrix");
        std::swap(a[piv], a[c]);
        std::swap(inv[piv], inv[c]);
        const double d = a[c][c];
        for (int k = 0; k < D; ++k) {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for (int r = 0; r < D; ++r) {
            if (r == c) continue;
            const double f = a[r][c];
            if (f == 0.0) continue;
            for (int k = 0; k < D; ++k) {
                a[r][k] -= f * a[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

constexpr std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

/// Visits every multi-index of {0..n-1}^D in row-major order (last axis fastest).
template <int D, class F>
void for_each_index(std::size_t n, F&& f) {
    std::array<std::size_t, D> idx{};
    idx.fill(0);
    const std::size_t total = ipow(n, D);
    for (std::size_t flat = 0; flat < total; ++flat) {
        f(flat, idx);
        for (int a = D - 1; a >= 0; --a) {
            if (++idx[a] < n) break;
            idx[a] = 0;
        }
    }
}

/// 64-bit FNV-1a; stable across platforms (std::hash is not).
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace blochsc
