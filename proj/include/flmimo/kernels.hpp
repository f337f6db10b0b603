/**
 * @file kernels.hpp
 * @brief Dense arithmetic primitives with runtime-dispatched SIMD variants.
 *
 * The scalar implementations are the reference; the AVX2 variants must agree
 * with them to floating-point reassociation accuracy (see kernel tests).
 * Dispatch is resolved once at startup from CPUID and can be overridden for
 * testing via force_backend().
 */
#pragma once

#include <cstddef>

namespace flmimo::kernels {

enum class Backend { kScalar, kAvx2 };

Backend active_backend();
const char* backend_name();

// Test hook. Throws std::runtime_error if the requested backend is not
// supported on this machine.
void force_backend(Backend b);

// sum_i x[i]*y[i]
double dot(const double* x, const double* y, int n);

// y += a*x
void axpy(int n, double a, const double* x, double* y);

// x *= a
void scal(int n, double a, double* x);

// Row-major rank-k update: C(m x p) -= A(m x k) * B(p x k)^T.
// lda/ldb/ldc are row strides. This is the hot kernel of the blocked
// Cholesky factorization.
void gemm_nt_minus(int m, int p, int k, const double* A, int lda,
                   const double* B, int ldb, double* C, int ldc);

}  // namespace flmimo::kernels
