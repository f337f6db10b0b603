// Scalar reference kernels. Kept free of compiler-specific pragmas so the
// behavior is the portable baseline the SIMD variants are tested against.

namespace flmimo::kernels::scalar {

double dot(const double* x, const double* y, int n) {
  // Four partial sums to match the accumulation order of the vector lanes
  // closely enough for tight equivalence tolerances.
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  for (; i < n; ++i) s0 += x[i] * y[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(int n, double a, const double* x, double* y) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

void scal(int n, double a, double* x) {
  for (int i = 0; i < n; ++i) x[i] *= a;
}

void gemm_nt_minus(int m, int p, int k, const double* A, int lda,
                   const double* B, int ldb, double* C, int ldc) {
  for (int i = 0; i < m; ++i) {
    const double* ai = A + static_cast<long>(i) * lda;
    double* ci = C + static_cast<long>(i) * ldc;
    for (int j = 0; j < p; ++j) {
      const double* bj = B + static_cast<long>(j) * ldb;
      ci[j] -= dot(ai, bj, k);
    }
  }
}

}  // namespace flmimo::kernels::scalar
