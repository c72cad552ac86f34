#include "gia/kernels.hpp"

#include <atomic>

namespace gia::kernels {

namespace {

// Row kernels shared by the serial and OpenMP variants. Keeping one body per
// form guarantees both variants perform the identical per-element operation
// sequence.

inline void nn_row(const double* a, const double* b, double* c,
                   std::size_t i, std::size_t k, std::size_t n) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = arow[kk];
        const double* brow = b + kk * n;
        for (std::size_t j = 0; j < n; ++j) {
            crow[j] += aik * brow[j];
        }
    }
}

inline void nt_row(const double* a, const double* b, double* c,
                   std::size_t i, std::size_t k, std::size_t n) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        // Four independent accumulator chains keep the FMA pipeline busy;
        // the combination order is fixed, so results are reproducible.
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
        std::size_t kk = 0;
        for (; kk + 4 <= k; kk += 4) {
            s0 += arow[kk + 0] * brow[kk + 0];
            s1 += arow[kk + 1] * brow[kk + 1];
            s2 += arow[kk + 2] * brow[kk + 2];
            s3 += arow[kk + 3] * brow[kk + 3];
        }
        double tail = 0.0;
        for (; kk < k; ++kk) {
            tail += arow[kk] * brow[kk];
        }
        crow[j] += ((s0 + s1) + (s2 + s3)) + tail;
    }
}

// A^T * B row: output row i accumulates A[kk*m + i] * B[kk*n + j] in kk
// order, matching the serial k-outer loop element-wise.
inline void tn_row(const double* a, const double* b, double* c,
                   std::size_t i, std::size_t m, std::size_t k, std::size_t n) {
    double* crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double aki = a[kk * m + i];
        const double* brow = b + kk * n;
        for (std::size_t j = 0; j < n; ++j) {
            crow[j] += aki * brow[j];
        }
    }
}

std::atomic<std::size_t> g_parallel_threshold{1u << 18}; // m*k*n

} // namespace

void gemm_nn_serial(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        nn_row(a, b, c, i, k, n);
    }
}

void gemm_nn_omp(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i) {
        nn_row(a, b, c, static_cast<std::size_t>(i), k, n);
    }
}

void gemm_nt_serial(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        nt_row(a, b, c, i, k, n);
    }
}

void gemm_nt_omp(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i) {
        nt_row(a, b, c, static_cast<std::size_t>(i), k, n);
    }
}

void gemm_tn_serial(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        tn_row(a, b, c, i, m, k, n);
    }
}

void gemm_tn_omp(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i) {
        tn_row(a, b, c, static_cast<std::size_t>(i), m, k, n);
    }
}

std::size_t parallel_threshold() {
    return g_parallel_threshold.load(std::memory_order_relaxed);
}

void set_parallel_threshold(std::size_t work) {
    g_parallel_threshold.store(work, std::memory_order_relaxed);
}

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    if (m * k * n >= parallel_threshold()) {
        gemm_nn_omp(a, b, c, m, k, n);
    } else {
        gemm_nn_serial(a, b, c, m, k, n);
    }
}

void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    if (m * k * n >= parallel_threshold()) {
        gemm_nt_omp(a, b, c, m, k, n);
    } else {
        gemm_nt_serial(a, b, c, m, k, n);
    }
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    if (m * k * n >= parallel_threshold()) {
        gemm_tn_omp(a, b, c, m, k, n);
    } else {
        gemm_tn_serial(a, b, c, m, k, n);
    }
}

} // namespace gia::kernels
