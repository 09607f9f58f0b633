#pragma once

#include <cstddef>

// Low-level dense kernels. Every kernel has a serial reference used by the
// parallel-parity tests; the default entry points use OpenMP when available.
// Per-output-cell reduction order is ascending-k in both variants, so serial
// and parallel results are bitwise identical.

namespace earth::kernels {

// Global switch for the OpenMP paths. Defaults to on; the benchmark and the
// parity tests flip it explicitly.
void set_parallel(bool enabled);
bool parallel_enabled();
int max_threads();

namespace serial {
// c[m x n] = a[m x k] * b[k x n]
void matmul(double* c, const double* a, const double* b, int m, int k, int n);
// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt(double* c, const double* a, const double* b, int m, int k, int n);
// c[m x n] = a[k x m]^T * b[k x n]
void matmul_tn(double* c, const double* a, const double* b, int m, int k, int n);
}  // namespace serial

void matmul(double* c, const double* a, const double* b, int m, int k, int n);
void matmul_nt(double* c, const double* a, const double* b, int m, int k, int n);
void matmul_tn(double* c, const double* a, const double* b, int m, int k, int n);

}  // namespace earth::kernels
