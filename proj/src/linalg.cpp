#include "flmimo/linalg.hpp"

#include <cmath>

#include "flmimo/kernels.hpp"

namespace flmimo::linalg {

namespace {

constexpr int kBlock = 96;

// Unblocked Cholesky of the [j0, j1) diagonal block, then the panel solve of
// the rows below it against that block.
bool factor_panel(Mat& A, int j0, int j1) {
  const int n = A.rows;
  for (int j = j0; j < j1; ++j) {
    double* rj = A.row(j);
    double d = rj[j] - kernels::dot(rj + j0, rj + j0, j - j0);
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    rj[j] = d;
    const double inv = 1.0 / d;
    for (int i = j + 1; i < n; ++i) {
      double* ri = A.row(i);
      ri[j] = (ri[j] - kernels::dot(ri + j0, rj + j0, j - j0)) * inv;
    }
  }
  return true;
}

}  // namespace

bool cholesky_in_place(Mat& A, double ridge) {
  const int n = A.rows;
  if (ridge != 0.0) {
    for (int i = 0; i < n; ++i) A.at(i, i) += ridge;
  }
  for (int j0 = 0; j0 < n; j0 += kBlock) {
    const int j1 = std::min(j0 + kBlock, n);
    if (j0 > 0) {
      // Left-looking update of the current column block from all previously
      // factored panels: A[j0:n, j0:j1] -= L[j0:n, 0:j0] * L[j0:j1, 0:j0]^T.
      kernels::gemm_nt_minus(n - j0, j1 - j0, j0, A.row(j0), A.cols, A.row(j0),
                             A.cols, A.row(j0) + j0, A.cols);
    }
    if (!factor_panel(A, j0, j1)) return false;
  }
  return true;
}

void trsm_lower_left(const Mat& L, double* B, int m, int ldb) {
  const int n = L.rows;
  for (int i = 0; i < n; ++i) {
    const double* li = L.row(i);
    double* bi = B + static_cast<long>(i) * ldb;
    for (int j = 0; j < i; ++j) {
      if (li[j] != 0.0) kernels::axpy(m, -li[j], B + static_cast<long>(j) * ldb, bi);
    }
    kernels::scal(m, 1.0 / li[i], bi);
  }
}

void trsm_lower_trans_left(const Mat& L, double* B, int m, int ldb) {
  const int n = L.rows;
  for (int i = n - 1; i >= 0; --i) {
    double* bi = B + static_cast<long>(i) * ldb;
    kernels::scal(m, 1.0 / L.at(i, i), bi);
    const double* li = L.row(i);
    for (int j = 0; j < i; ++j) {
      if (li[j] != 0.0) kernels::axpy(m, -li[j], bi, B + static_cast<long>(j) * ldb);
    }
  }
}

void chol_solve(const Mat& L, double* b) {
  trsm_lower_left(L, b, 1, 1);
  trsm_lower_trans_left(L, b, 1, 1);
}

void matvec(const Mat& M, const double* x, double* y) {
  for (int i = 0; i < M.rows; ++i) y[i] = kernels::dot(M.row(i), x, M.cols);
}

}  // namespace flmimo::linalg
