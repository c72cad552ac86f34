// Compares the serial reference kernels against the OpenMP variants and
// verifies on the way that both produce identical bits. Sizes cover the
// model's tiny matrices up to blocks where threading starts to pay off.

#include <omp.h>

#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#include "gia/kernels.hpp"

using gia::kernels::gemm_nn_omp;
using gia::kernels::gemm_nn_serial;
using gia::kernels::gemm_nt_omp;
using gia::kernels::gemm_nt_serial;
using gia::kernels::gemm_tn_omp;
using gia::kernels::gemm_tn_serial;

namespace {

using Kernel = void (*)(const double*, const double*, double*,
                        std::size_t, std::size_t, std::size_t);

struct Case {
    const char* name;
    Kernel serial;
    Kernel parallel;
};

double run_kernel(Kernel k, const std::vector<double>& a,
                  const std::vector<double>& b, std::vector<double>& c,
                  std::size_t m, std::size_t kk, std::size_t n, int iters) {
    double best = 1e300;
    for (int it = 0; it < iters; ++it) {
        std::fill(c.begin(), c.end(), 0.0);
        const double t0 = omp_get_wtime();
        k(a.data(), b.data(), c.data(), m, kk, n);
        const double t1 = omp_get_wtime();
        best = std::min(best, t1 - t0);
    }
    return best;
}

} // namespace

int main(int argc, char** argv) {
    int iters = 5;
    if (argc > 1) iters = std::atoi(argv[1]);

    const Case cases[] = {
        {"nn", gemm_nn_serial, gemm_nn_omp},
        {"nt", gemm_nt_serial, gemm_nt_omp},
        {"tn", gemm_tn_serial, gemm_tn_omp},
    };
    const std::size_t sizes[][3] = {
        {16, 32, 128},    // model-scale FFN tile
        {128, 128, 128},
        {256, 256, 256},
        {512, 512, 512},
        {1024, 512, 512},
    };

    std::printf("threads available: %d\n", omp_get_max_threads());
    std::printf("%-4s %-18s %12s %12s %8s %8s\n", "form", "m x k x n",
                "serial (ms)", "openmp (ms)", "speedup", "bitwise");

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    for (const auto& sz : sizes) {
        const std::size_t m = sz[0], k = sz[1], n = sz[2];
        std::vector<double> a(m * k), b(k * n), bt(n * k), at(k * m);
        for (double& x : a) x = dist(rng);
        for (double& x : b) x = dist(rng);
        for (double& x : bt) x = dist(rng);
        for (double& x : at) x = dist(rng);
        std::vector<double> cs(m * n), cp(m * n);

        for (const Case& c : cases) {
            const std::vector<double>* lhs = &a;
            const std::vector<double>* rhs = &b;
            if (std::strcmp(c.name, "nt") == 0) rhs = &bt;
            if (std::strcmp(c.name, "tn") == 0) lhs = &at;

            const double ts = run_kernel(c.serial, *lhs, *rhs, cs, m, k, n, iters);
            const double tp = run_kernel(c.parallel, *lhs, *rhs, cp, m, k, n, iters);
            const bool same = cs == cp;
            std::printf("%-4s %4zu x %4zu x %4zu %12.3f %12.3f %7.2fx %8s\n",
                        c.name, m, k, n, ts * 1e3, tp * 1e3, ts / tp,
                        same ? "yes" : "NO");
            if (!same) return 1;
        }
    }
    return 0;
}
