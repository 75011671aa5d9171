#pragma once

// Position regions given as unions of open Cartesian boxes, read modulo the
// lattice, and phase-space boxes for the compact set K.

#include <algorithm>

#include "lattice.hpp"

namespace blochsc {

template <int D>
struct Box {
    Vec<D> lo{};
    Vec<D> hi{};

    bool contains(const Vec<D>& x) const {
        for (int i = 0; i < D; ++i)
            if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
        return true;
    }
    double distance(const Vec<D>& x) const {
        double s = 0.0;
        for (int i = 0; i < D; ++i) {
            const double d = std::max({lo[i] - x[i], 0.0, x[i] - hi[i]});
            s += d * d;
        }
        return std::sqrt(s);
    }
    bool empty() const {
        for (int i = 0; i < D; ++i)
            if (!(hi[i] > lo[i])) return true;
        return false;
    }
};

/// Omega^L (margin 0) or its open delta-neighbourhood Omega_delta^L (margin delta).
template <int D>
class Region {
public:
    Region(const Lattice<D>& lat, std::vector<Box<D>> boxes, double margin = 0.0)
        : lat_(lat), boxes_(std::move(boxes)), margin_(margin) {
        if (margin < 0.0) throw DomainError("region margin must be nonnegative");
        boxes_.erase(std::remove_if(boxes_.begin(), boxes_.end(), [](const Box<D>& b) { return b.empty(); }),
                     boxes_.end());
        for (int m = 0; m < static_cast<int>(ipow(3, D)); ++m) {
            IVec<D> n{};
            int r = m;
            for (int a = 0; a < D; ++a) {
                n[a] = r % 3 - 1;
                r /= 3;
            }
            shifts_.push_back(lat_.lattice_vector(n));
        }
    }

    /// Whole cell.
    static Region full(const Lattice<D>& lat) {
        Box<D> b;
        for (int i = 0; i < D; ++i) {
            b.lo[i] = -1e300;
            b.hi[i] = 1e300;
        }
        return Region(lat, {b});
    }

    const std::vector<Box<D>>& boxes() const { return boxes_; }
    double margin() const { return margin_; }
    bool empty() const { return boxes_.empty(); }

    Region dilated(double delta) const {
        if (!(delta > 0.0)) throw DomainError("dilation radius must be positive");
        return Region(lat_, boxes_, margin_ + delta);
    }

    /// dist(x, Omega^L).
    double distance(const Vec<D>& x) const {
        const Vec<D> r = lat_.reduce(x);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : boxes_)
            for (const auto& s : shifts_) best = std::min(best, b.distance(r + s));
        return best;
    }

    bool contains(const Vec<D>& x) const {
        if (boxes_.empty()) return false;
        if (margin_ == 0.0) {
            const Vec<D> r = lat_.reduce(x);
            for (const auto& b : boxes_)
                for (const auto& s : shifts_)
                    if (b.contains(r + s)) return true;
            return false;
        }
        return distance(x) < margin_;
    }

    /// chi(x) = (1 - dist(x, Omega^L)/delta)_+, Lipschitz with constant 1/delta.
    double cutoff(const Vec<D>& x, double delta) const {
        return std::max(0.0, 1.0 - distance(x) / delta);
    }

    /// True when every box lies in the closed cell.
    bool inside_cell() const {
        for (const auto& b : boxes_) {
            for (std::size_t mask = 0; mask < (std::size_t{1} << D); ++mask) {
                Vec<D> c{};
                for (int i = 0; i < D; ++i) c[i] = (mask >> i & 1U) ? b.hi[i] : b.lo[i];
                const Vec<D> t = lat_.to_lattice(c);
                for (double v : t)
                    if (std::abs(v) > 0.5 + 1e-12) return false;
            }
        }
        return true;
    }

private:
    Lattice<D> lat_;
    std::vector<Box<D>> boxes_;
    double margin_;
    std::vector<Vec<D>> shifts_;
};

/// Box in phase space: closed position box times closed momentum box.
template <int D>
struct PhaseBox {
    Box<D> x;
    Box<D> xi;

    bool contains(const Vec<D>& q, const Vec<D>& p) const {
        for (int i = 0; i < D; ++i) {
            if (q[i] < x.lo[i] || q[i] > x.hi[i]) return false;
            if (p[i] < xi.lo[i] || p[i] > xi.hi[i]) return false;
        }
        return true;
    }
};

template <int D>
bool in_any(const std::vector<PhaseBox<D>>& K, const Vec<D>& q, const Vec<D>& p) {
    for (const auto& b : K)
        if (b.contains(q, p)) return true;
    return false;
}

}  // namespace blochsc
