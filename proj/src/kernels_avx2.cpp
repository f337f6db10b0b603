// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma in its own TU; only
// reached through the dispatch table when CPUID reports support.

#include <immintrin.h>

namespace flmimo::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double dot(const double* x, const double* y, int n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  int i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy(int n, double a, const double* x, double* y) {
  __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void scal(int n, double a, double* x) {
  __m256d va = _mm256_set1_pd(a);
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

namespace {

// 4x2 tile of C accumulated as dot products along k. Eight independent FMA
// chains keep the two FMA ports busy; the horizontal sums happen once per
// tile.
inline void tile4x2(const double* a0, const double* a1, const double* a2,
                    const double* a3, const double* b0, const double* b1,
                    int k, double* c0, double* c1, double* c2, double* c3,
                    long cstride) {
  __m256d s00 = _mm256_setzero_pd(), s01 = _mm256_setzero_pd();
  __m256d s10 = _mm256_setzero_pd(), s11 = _mm256_setzero_pd();
  __m256d s20 = _mm256_setzero_pd(), s21 = _mm256_setzero_pd();
  __m256d s30 = _mm256_setzero_pd(), s31 = _mm256_setzero_pd();
  int t = 0;
  for (; t + 4 <= k; t += 4) {
    __m256d vb0 = _mm256_loadu_pd(b0 + t);
    __m256d vb1 = _mm256_loadu_pd(b1 + t);
    __m256d va;
    va = _mm256_loadu_pd(a0 + t);
    s00 = _mm256_fmadd_pd(va, vb0, s00);
    s01 = _mm256_fmadd_pd(va, vb1, s01);
    va = _mm256_loadu_pd(a1 + t);
    s10 = _mm256_fmadd_pd(va, vb0, s10);
    s11 = _mm256_fmadd_pd(va, vb1, s11);
    va = _mm256_loadu_pd(a2 + t);
    s20 = _mm256_fmadd_pd(va, vb0, s20);
    s21 = _mm256_fmadd_pd(va, vb1, s21);
    va = _mm256_loadu_pd(a3 + t);
    s30 = _mm256_fmadd_pd(va, vb0, s30);
    s31 = _mm256_fmadd_pd(va, vb1, s31);
  }
  double r00 = hsum(s00), r01 = hsum(s01);
  double r10 = hsum(s10), r11 = hsum(s11);
  double r20 = hsum(s20), r21 = hsum(s21);
  double r30 = hsum(s30), r31 = hsum(s31);
  for (; t < k; ++t) {
    double w0 = b0[t], w1 = b1[t];
    r00 += a0[t] * w0;
    r01 += a0[t] * w1;
    r10 += a1[t] * w0;
    r11 += a1[t] * w1;
    r20 += a2[t] * w0;
    r21 += a2[t] * w1;
    r30 += a3[t] * w0;
    r31 += a3[t] * w1;
  }
  (void)cstride;
  c0[0] -= r00;
  c0[1] -= r01;
  c1[0] -= r10;
  c1[1] -= r11;
  c2[0] -= r20;
  c2[1] -= r21;
  c3[0] -= r30;
  c3[1] -= r31;
}

}  // namespace

void gemm_nt_minus(int m, int p, int k, const double* A, int lda,
                   const double* B, int ldb, double* C, int ldc) {
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = A + static_cast<long>(i) * lda;
    const double* a1 = a0 + lda;
    const double* a2 = a1 + lda;
    const double* a3 = a2 + lda;
    double* c0 = C + static_cast<long>(i) * ldc;
    double* c1 = c0 + ldc;
    double* c2 = c1 + ldc;
    double* c3 = c2 + ldc;
    int j = 0;
    for (; j + 2 <= p; j += 2) {
      tile4x2(a0, a1, a2, a3, B + static_cast<long>(j) * ldb,
              B + static_cast<long>(j + 1) * ldb, k, c0 + j, c1 + j, c2 + j,
              c3 + j, ldc);
    }
    for (; j < p; ++j) {
      const double* bj = B + static_cast<long>(j) * ldb;
      c0[j] -= dot(a0, bj, k);
      c1[j] -= dot(a1, bj, k);
      c2[j] -= dot(a2, bj, k);
      c3[j] -= dot(a3, bj, k);
    }
  }
  for (; i < m; ++i) {
    const double* ai = A + static_cast<long>(i) * lda;
    double* ci = C + static_cast<long>(i) * ldc;
    for (int j = 0; j < p; ++j) {
      ci[j] -= dot(ai, B + static_cast<long>(j) * ldb, k);
    }
  }
}

}  // namespace flmimo::kernels::avx2
