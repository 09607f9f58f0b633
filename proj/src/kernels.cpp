#include "earth/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace earth::kernels {

namespace {
bool g_parallel = true;
// Below this many output cells the fork/join overhead dominates.
constexpr long kParallelGrain = 16 * 1024;
}  // namespace

void set_parallel(bool enabled)
{
    g_parallel = enabled;
}

bool parallel_enabled()
{
    return g_parallel;
}

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace serial {

void matmul(double* c, const double* a, const double* b, int m, int k, int n)
{
    for (int i = 0; i < m; ++i) {
        double* ci       = c + (long)i * n;
        const double* ai = a + (long)i * k;
        for (int j = 0; j < n; ++j)
            ci[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + (long)p * n;
            for (int j = 0; j < n; ++j)
                ci[j] += aip * bp[j];
        }
    }
}

void matmul_nt(double* c, const double* a, const double* b, int m, int k, int n)
{
    for (int i = 0; i < m; ++i) {
        const double* ai = a + (long)i * k;
        for (int j = 0; j < n; ++j) {
            const double* bj = b + (long)j * k;
            double acc       = 0.0;
            for (int p = 0; p < k; ++p)
                acc += ai[p] * bj[p];
            c[(long)i * n + j] = acc;
        }
    }
}

void matmul_tn(double* c, const double* a, const double* b, int m, int k, int n)
{
    for (int i = 0; i < m; ++i) {
        double* ci = c + (long)i * n;
        for (int j = 0; j < n; ++j)
            ci[j] = 0.0;
        for (int p = 0; p < k; ++p) {
            const double api = a[(long)p * m + i];
            const double* bp = b + (long)p * n;
            for (int j = 0; j < n; ++j)
                ci[j] += api * bp[j];
        }
    }
}

}  // namespace serial

// The parallel variants split work by output row. Each cell is still reduced
// by one thread in ascending-k order, matching the serial reference bitwise.

void matmul(double* c, const double* a, const double* b, int m, int k, int n)
{
#ifdef _OPENMP
    if (g_parallel && (long)m * n * k >= kParallelGrain) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            double* ci       = c + (long)i * n;
            const double* ai = a + (long)i * k;
            for (int j = 0; j < n; ++j)
                ci[j] = 0.0;
            for (int p = 0; p < k; ++p) {
                const double aip = ai[p];
                const double* bp = b + (long)p * n;
                for (int j = 0; j < n; ++j)
                    ci[j] += aip * bp[j];
            }
        }
        return;
    }
#endif
    serial::matmul(c, a, b, m, k, n);
}

void matmul_nt(double* c, const double* a, const double* b, int m, int k, int n)
{
#ifdef _OPENMP
    if (g_parallel && (long)m * n * k >= kParallelGrain) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            const double* ai = a + (long)i * k;
            for (int j = 0; j < n; ++j) {
                const double* bj = b + (long)j * k;
                double acc       = 0.0;
                for (int p = 0; p < k; ++p)
                    acc += ai[p] * bj[p];
                c[(long)i * n + j] = acc;
            }
        }
        return;
    }
#endif
    serial::matmul_nt(c, a, b, m, k, n);
}

void matmul_tn(double* c, const double* a, const double* b, int m, int k, int n)
{
#ifdef _OPENMP
    if (g_parallel && (long)m * n * k >= kParallelGrain) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < m; ++i) {
            double* ci = c + (long)i * n;
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int p = 0; p < k; ++p)
                    acc += a[(long)p * m + i] * b[(long)p * n + j];
                ci[j] = acc;
            }
        }
        return;
    }
#endif
    serial::matmul_tn(c, a, b, m, k, n);
}

}  // namespace earth::kernels
