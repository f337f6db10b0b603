/**
 * @file linalg.hpp
 * @brief Small dense linear algebra toolkit used by the interior-point solver.
 *
 * Row-major storage throughout. Factorizations operate on the lower triangle;
 * entries above the diagonal are neither read nor kept meaningful.
 */
#pragma once

#include <vector>

namespace flmimo::linalg {

struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
  double& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
  void set_zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// In-place blocked Cholesky of the lower triangle: A = L L^T. Adds `ridge` to
// the diagonal before factoring. Returns false when a pivot is not strictly
// positive.
bool cholesky_in_place(Mat& A, double ridge = 0.0);

// B (n x m, row-major, row stride ldb) := L^{-1} B, L lower triangular.
void trsm_lower_left(const Mat& L, double* B, int m, int ldb);

// B := L^{-T} B.
void trsm_lower_trans_left(const Mat& L, double* B, int m, int ldb);

// Solve (L L^T) x = b in place.
void chol_solve(const Mat& L, double* b);

// y = M x for a general row-major matrix.
void matvec(const Mat& M, const double* x, double* y);

}  // namespace flmimo::linalg
