#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace frac::par {

enum class Mode { serial, openmp };

/// Execution mode for all kernels. Default is OpenMP; the serial path is the
/// reference implementation the tests compare against.
inline Mode& mode() {
    static Mode m = Mode::openmp;
    return m;
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

/// Honors FRAC_THREADS if set; returns the resulting thread count.
inline int init_threads_from_env() {
    if (const char* env = std::getenv("FRAC_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) set_threads(n);
    }
    return max_threads();
}

// Reductions are chunked with a fixed chunk size, partials are combined in
// chunk order. Results are bitwise identical between the serial and OpenMP
// paths and independent of the thread count.
constexpr std::size_t kChunk = 1024;

template <class F>
void parallel_for(std::size_t n, F&& body) {
    if (mode() == Mode::serial) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        body(static_cast<std::size_t>(i));
#else
    for (std::size_t i = 0; i < n; ++i) body(i);
#endif
}

/// Deterministic sum of f(i), i in [0,n).
template <class F>
double det_sum(std::size_t n, F&& f) {
    if (n == 0) return 0.0;
    const std::size_t nchunks = (n + kChunk - 1) / kChunk;
    std::vector<double> partial(nchunks, 0.0);
    auto chunk_body = [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = lo + kChunk < n ? lo + kChunk : n;
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += f(i);
        partial[c] = acc;
    };
    if (mode() == Mode::serial) {
        for (std::size_t c = 0; c < nchunks; ++c) chunk_body(c);
    } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nchunks); ++c)
            chunk_body(static_cast<std::size_t>(c));
#else
        for (std::size_t c = 0; c < nchunks; ++c) chunk_body(c);
#endif
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

struct MinResult {
    double value = std::numeric_limits<double>::infinity();
    std::size_t index = static_cast<std::size_t>(-1);
};

/// Deterministic argmin with ties broken by smallest index.
template <class F>
MinResult det_min(std::size_t n, F&& f) {
    if (n == 0) return {};
    const std::size_t nchunks = (n + kChunk - 1) / kChunk;
    std::vector<MinResult> partial(nchunks);
    auto chunk_body = [&](std::size_t c) {
        const std::size_t lo = c * kChunk;
        const std::size_t hi = lo + kChunk < n ? lo + kChunk : n;
        MinResult best;
        for (std::size_t i = lo; i < hi; ++i) {
            double v = f(i);
            if (v < best.value || (v == best.value && i < best.index)) {
                best.value = v;
                best.index = i;
            }
        }
        partial[c] = best;
    };
    if (mode() == Mode::serial) {
        for (std::size_t c = 0; c < nchunks; ++c) chunk_body(c);
    } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nchunks); ++c)
            chunk_body(static_cast<std::size_t>(c));
#else
        for (std::size_t c = 0; c < nchunks; ++c) chunk_body(c);
#endif
    }
    MinResult best;
    for (const auto& p : partial) {
        if (p.value < best.value || (p.value == best.value && p.index < best.index)) best = p;
    }
    return best;
}

/// Deterministic max of f(i); NaN-free inputs assumed.
template <class F>
double det_max(std::size_t n, F&& f) {
    MinResult r = det_min(n, [&](std::size_t i) { return -f(i); });
    return -r.value;
}

}  // namespace frac::par
