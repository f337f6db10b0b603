#include "flmimo/kernels.hpp"

#include <stdexcept>

namespace flmimo::kernels {

namespace scalar {
double dot(const double*, const double*, int);
void axpy(int, double, const double*, double*);
void scal(int, double, double*);
void gemm_nt_minus(int, int, int, const double*, int, const double*, int,
                   double*, int);
}  // namespace scalar

namespace avx2 {
double dot(const double*, const double*, int);
void axpy(int, double, const double*, double*);
void scal(int, double, double*);
void gemm_nt_minus(int, int, int, const double*, int, const double*, int,
                   double*, int);
}  // namespace avx2

namespace {

struct Table {
  double (*dot)(const double*, const double*, int);
  void (*axpy)(int, double, const double*, double*);
  void (*scal)(int, double, double*);
  void (*gemm_nt_minus)(int, int, int, const double*, int, const double*, int,
                        double*, int);
  Backend backend;
};

constexpr Table kScalarTable{scalar::dot, scalar::axpy, scalar::scal,
                             scalar::gemm_nt_minus, Backend::kScalar};
constexpr Table kAvx2Table{avx2::dot, avx2::axpy, avx2::scal,
                           avx2::gemm_nt_minus, Backend::kAvx2};

bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const Table* select_default() {
  return avx2_supported() ? &kAvx2Table : &kScalarTable;
}

const Table* g_table = select_default();

}  // namespace

Backend active_backend() { return g_table->backend; }

const char* backend_name() {
  return g_table->backend == Backend::kAvx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
  if (b == Backend::kAvx2) {
    if (!avx2_supported()) throw std::runtime_error("avx2 not supported on this cpu");
    g_table = &kAvx2Table;
  } else {
    g_table = &kScalarTable;
  }
}

double dot(const double* x, const double* y, int n) { return g_table->dot(x, y, n); }

void axpy(int n, double a, const double* x, double* y) { g_table->axpy(n, a, x, y); }

void scal(int n, double a, double* x) { g_table->scal(n, a, x); }

void gemm_nt_minus(int m, int p, int k, const double* A, int lda,
                   const double* B, int ldb, double* C, int ldc) {
  g_table->gemm_nt_minus(m, p, k, A, lda, B, ldb, C, ldc);
}

}  // namespace flmimo::kernels
