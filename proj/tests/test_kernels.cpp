#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "flmimo/kernels.hpp"
#include "flmimo/linalg.hpp"

using namespace flmimo;

namespace {

std::vector<double> random_vec(std::mt19937_64& gen, int n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = scale * (2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0);
  }
  return v;
}

struct BackendGuard {
  BackendGuard() : saved(kernels::active_backend()) {}
  ~BackendGuard() { kernels::force_backend(saved); }
  kernels::Backend saved;
};

bool have_avx2() {
  BackendGuard g;
  try {
    kernels::force_backend(kernels::Backend::kAvx2);
  } catch (const std::runtime_error&) {
    return false;
  }
  return true;
}

}  // namespace

TEST_CASE("dot/axpy/scal agree across backends") {
  if (!have_avx2()) return;
  std::mt19937_64 gen(12345);
  BackendGuard guard;
  for (int n : {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 63, 64, 257, 1000}) {
    auto x = random_vec(gen, n), y = random_vec(gen, n);

    kernels::force_backend(kernels::Backend::kScalar);
    const double d_ref = kernels::dot(x.data(), y.data(), n);
    auto y_ref = y;
    kernels::axpy(n, 0.37, x.data(), y_ref.data());
    auto s_ref = x;
    kernels::scal(n, -1.25, s_ref.data());

    kernels::force_backend(kernels::Backend::kAvx2);
    const double d_simd = kernels::dot(x.data(), y.data(), n);
    auto y_simd = y;
    kernels::axpy(n, 0.37, x.data(), y_simd.data());
    auto s_simd = x;
    kernels::scal(n, -1.25, s_simd.data());

    CHECK(d_simd == doctest::Approx(d_ref).epsilon(1e-13));
    for (int i = 0; i < n; ++i) {
      CHECK(y_simd[i] == doctest::Approx(y_ref[i]).epsilon(1e-14));
      CHECK(s_simd[i] == s_ref[i]);
    }
  }
}

TEST_CASE("gemm_nt_minus equivalence on ragged shapes") {
  if (!have_avx2()) return;
  std::mt19937_64 gen(99);
  BackendGuard guard;
  for (auto [m, p, k] : std::vector<std::array<int, 3>>{
           {1, 1, 1}, {3, 2, 5}, {4, 2, 8}, {5, 3, 17}, {8, 8, 64}, {13, 7, 33}, {32, 9, 96}}) {
    auto a = random_vec(gen, m * k), b = random_vec(gen, p * k);
    auto c0 = random_vec(gen, m * p);

    auto c_ref = c0;
    kernels::force_backend(kernels::Backend::kScalar);
    kernels::gemm_nt_minus(m, p, k, a.data(), k, b.data(), k, c_ref.data(), p);

    auto c_simd = c0;
    kernels::force_backend(kernels::Backend::kAvx2);
    kernels::gemm_nt_minus(m, p, k, a.data(), k, b.data(), k, c_simd.data(), p);

    for (int i = 0; i < m * p; ++i) {
      CHECK(c_simd[i] == doctest::Approx(c_ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("cholesky reconstructs SPD matrices") {
  std::mt19937_64 gen(7);
  for (int n : {1, 2, 5, 31, 64, 130, 311}) {
    // A = B B^T + n I is SPD.
    auto b = random_vec(gen, n * n);
    linalg::Mat A(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = kernels::dot(&b[static_cast<size_t>(i) * n], &b[static_cast<size_t>(j) * n], n);
        A.at(i, j) = s + (i == j ? n : 0.0);
      }
    }
    linalg::Mat L = A;
    REQUIRE(linalg::cholesky_in_place(L));
    // Check LL^T == A on the lower triangle.
    double worst = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = 0;
        for (int t = 0; t <= j; ++t) s += L.at(i, t) * L.at(j, t);
        worst = std::max(worst, std::abs(s - A.at(i, j)) / (1.0 + std::abs(A.at(i, j))));
      }
    }
    CHECK(worst < 1e-11);
  }
}

TEST_CASE("cholesky rejects indefinite input") {
  linalg::Mat A(2, 2);
  A.at(0, 0) = 1.0;
  A.at(1, 0) = 2.0;
  A.at(1, 1) = 1.0;  // eigenvalues -1 and 3
  CHECK_FALSE(linalg::cholesky_in_place(A));
}

TEST_CASE("triangular solves invert the factorization") {
  std::mt19937_64 gen(21);
  const int n = 57, m = 9;
  auto b = random_vec(gen, n * n);
  linalg::Mat A(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      A.at(i, j) = kernels::dot(&b[static_cast<size_t>(i) * n], &b[static_cast<size_t>(j) * n], n) +
                   (i == j ? n : 0.0);
    }
  }
  linalg::Mat L = A;
  REQUIRE(linalg::cholesky_in_place(L));

  auto rhs = random_vec(gen, n * m);
  auto x = rhs;
  linalg::trsm_lower_left(L, x.data(), m, m);
  linalg::trsm_lower_trans_left(L, x.data(), m, m);
  // A x should reproduce rhs (A applied symmetrically from its lower part).
  for (int c = 0; c < m; ++c) {
    for (int i = 0; i < n; ++i) {
      double s = 0;
      for (int j = 0; j < n; ++j) {
        const double aij = j <= i ? A.at(i, j) : A.at(j, i);
        s += aij * x[static_cast<size_t>(j) * m + c];
      }
      CHECK(s == doctest::Approx(rhs[static_cast<size_t>(i) * m + c]).epsilon(1e-9));
    }
  }
}

TEST_CASE("dispatch reports a backend") {
  CHECK((kernels::backend_name() == std::string("avx2") ||
         kernels::backend_name() == std::string("scalar")));
}
