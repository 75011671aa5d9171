#pragma once

// Thin FFTW3 wrapper. Plans are created once per (shape, direction) and reused
// through fftw_execute_dft, which is thread-safe; plan creation is not, so the
// cache is guarded by a mutex.

#include <fftw3.h>

#include <array>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "core.hpp"

namespace blochsc::fft {

namespace detail {

struct PlanCache {
    std::mutex mu;
    std::map<std::tuple<int, int, int, int>, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }
};

inline PlanCache& cache() {
    static PlanCache c;
    return c;
}

template <int D>
fftw_plan plan_for(int n, int sign) {
    static_assert(D >= 1 && D <= 3, "fft supports D = 1, 2, 3");
    auto& c = cache();
    std::lock_guard<std::mutex> lock(c.mu);
    const auto key = std::make_tuple(D, n, sign, 0);
    if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
    const std::size_t total = ipow(static_cast<std::size_t>(n), D);
    std::vector<cplx> in(total), out(total);
    std::array<int, D> dims{};
    dims.fill(n);
    fftw_plan p = fftw_plan_dft(D, dims.data(), reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    c.plans.emplace(key, p);
    return p;
}

}  // namespace detail

/// Unnormalized forward transform, out[m] = sum_j in[j] exp(-2 pi i m.j / n).
template <int D>
void forward(const std::vector<cplx>& in, std::vector<cplx>& out, int n) {
    out.resize(in.size());
    fftw_execute_dft(detail::plan_for<D>(n, FFTW_FORWARD),
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

/// Unnormalized backward transform, out[j] = sum_m in[m] exp(+2 pi i m.j / n).
template <int D>
void backward(const std::vector<cplx>& in, std::vector<cplx>& out, int n) {
    out.resize(in.size());
    fftw_execute_dft(detail::plan_for<D>(n, FFTW_BACKWARD),
                     reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                     reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace blochsc::fft
