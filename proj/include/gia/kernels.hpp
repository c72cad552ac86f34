#pragma once

#include <cstddef>

// Dense matrix kernels behind the tensor ops. Each comes in a serial
// reference variant and an OpenMP variant that splits rows across threads.
// Both accumulate (C += ...), never overwrite, so gradient buffers can be
// updated in place. The OpenMP variants compute every output element with the
// same per-element operation order as the serial ones, so results are bitwise
// identical for any thread count; the serial reference stays around as the
// test oracle and as the baseline for the kernel benchmark.

namespace gia::kernels {

// C (m x n) += A (m x k) * B (k x n)
void gemm_nn_serial(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);
void gemm_nn_omp(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);

// C (m x n) += A (m x k) * B^T, with B stored n x k
void gemm_nt_serial(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);
void gemm_nt_omp(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);

// C (m x n) += A^T * B, with A stored k x m and B stored k x n
void gemm_tn_serial(const double* a, const double* b, double* c,
                    std::size_t m, std::size_t k, std::size_t n);
void gemm_tn_omp(const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n);

// Dispatching entry points: use the OpenMP variant when m*k*n is at or above
// the parallel threshold, the serial one otherwise. The model's matrices are
// small enough that thread fan-out only pays off for large workloads.
std::size_t parallel_threshold();
void set_parallel_threshold(std::size_t work);

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

} // namespace gia::kernels
