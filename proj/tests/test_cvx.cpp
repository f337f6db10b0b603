#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "flmimo/cvx.hpp"

using namespace flmimo;
using cvx::AffForm;
using cvx::ConvexExpr;
using cvx::SubproblemSpec;

namespace {

AffForm var(int i, double c = 1.0, double b = 0.0) {
  AffForm a;
  a.add(i, c);
  a.b = b;
  return a;
}

SubproblemSpec boxed(int n, double lo, double hi) {
  SubproblemSpec s;
  s.n = n;
  s.lo.assign(n, lo);
  s.hi.assign(n, hi);
  return s;
}

}  // namespace

TEST_CASE("active bound: min x^2 subject to x >= 1") {
  SubproblemSpec s = boxed(1, 1.0, 10.0);
  s.objective.quads.push_back({var(0), 1.0});
  const auto sol = cvx::solve(s, std::vector<double>{5.0}, 1e-8);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.objective_value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("min 1/x + x attains 2 at x = 1") {
  SubproblemSpec s = boxed(1, 0.0, 100.0);
  s.objective.affine.add(0, 1.0);
  s.objective.recips.push_back({var(0), 1.0});
  const auto sol = cvx::solve(s, std::vector<double>{3.0}, 1e-8);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.objective_value == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("equality elimination: min x^2 + y^2 with x + y = 2") {
  SubproblemSpec s = boxed(2, -10.0, 10.0);
  s.objective.quads.push_back({var(0), 1.0});
  s.objective.quads.push_back({var(1), 1.0});
  cvx::LinEq eq;
  eq.a.add(0, 1.0);
  eq.a.add(1, 1.0);
  eq.a.b = -2.0;
  s.eqs.push_back(eq);
  // Start violates the equality on purpose; the solver projects first.
  const auto sol = cvx::solve(s, std::vector<double>{0.2, 0.1}, 1e-8);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.max_eq_residual < 1e-9);
}

TEST_CASE("solution is independent of the start for strictly convex objectives") {
  SubproblemSpec s = boxed(3, -5.0, 5.0);
  for (int i = 0; i < 3; ++i) {
    AffForm a = var(i);
    a.add((i + 1) % 3, 0.5);
    a.b = -0.3 * i;
    s.objective.quads.push_back({a, 1.0 + i});
  }
  s.objective.quads.push_back({var(0), 0.5});
  ConvexExpr g;  // x0 + x1 + x2 <= 1
  g.affine.add(0, 1.0);
  g.affine.add(1, 1.0);
  g.affine.add(2, 1.0);
  g.affine.b = -1.0;
  s.ineqs.push_back(g);
  const auto a1 = cvx::solve(s, std::vector<double>{0.0, 0.0, 0.0}, 1e-9);
  const auto a2 = cvx::solve(s, std::vector<double>{-2.0, 3.0, -1.0}, 1e-9);
  for (int i = 0; i < 3; ++i) CHECK(a1.x[i] == doctest::Approx(a2.x[i]).epsilon(1e-5));
}

TEST_CASE("random small specs match a dense grid-search oracle") {
  std::mt19937_64 gen(2024);
  auto u01 = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 2 + static_cast<int>(u01() * 2.999);  // 2..4
    SubproblemSpec s = boxed(n, 0.1, 2.0);
    // Objective: strictly convex quad + recip + affine, domain-positive on
    // the whole box.
    for (int i = 0; i < n; ++i) {
      AffForm a = var(i);
      a.b = -(0.2 + u01());
      s.objective.quads.push_back({a, 0.5 + u01()});
      s.objective.affine.add(i, (u01() - 0.5) * 0.5);
    }
    s.objective.recips.push_back({var(0, 1.0, 0.05), 0.2 + 0.3 * u01()});
    // One affine coupling constraint.
    ConvexExpr g;
    for (int i = 0; i < n; ++i) g.affine.add(i, 0.5 + u01());
    g.affine.b = -(1.0 + n * 0.8);
    s.ineqs.push_back(g);

    std::vector<double> start(n, 0.5);
    const auto sol = cvx::solve(s, start, 1e-8);

    // Grid-search oracle with two refinement passes.
    std::vector<double> lo(n, 0.1), hi(n, 2.0);
    double best = cvx::kInf;
    std::vector<double> bestx(n);
    for (int pass = 0; pass < 3; ++pass) {
      const int steps = 14;
      std::vector<int> c(n, 0);
      std::vector<double> x(n);
      while (true) {
        for (int i = 0; i < n; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * c[i] / (steps - 1);
        bool ok = true;
        for (const auto& e : s.ineqs) {
          if (e.eval(x) > 0) ok = false;
        }
        if (ok) {
          const double v = s.objective.eval(x);
          if (v < best) {
            best = v;
            bestx = x;
          }
        }
        int d = 0;
        while (d < n && ++c[d] == steps) c[d++] = 0;
        if (d == n) break;
      }
      for (int i = 0; i < n; ++i) {
        const double w = (hi[i] - lo[i]) / (steps - 1);
        lo[i] = std::max(0.1, bestx[i] - w);
        hi[i] = std::min(2.0, bestx[i] + w);
      }
    }
    CHECK(sol.objective_value <= best + 1e-4 * (1.0 + std::abs(best)));
    CHECK(sol.objective_value >= best - 1e-2 * (1.0 + std::abs(best)));
  }
}

TEST_CASE("phase1 trivial and contradictory cases") {
  // No inequalities: the box center works.
  SubproblemSpec s = boxed(2, -1.0, 3.0);
  const auto r = cvx::phase1(s);
  CHECK(r.feasible);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-9));

  // Contradictory affine bounds: x <= -1 and x >= 1 within the box.
  SubproblemSpec bad = boxed(1, -5.0, 5.0);
  ConvexExpr c1;  // x + 1 <= 0
  c1.affine.add(0, 1.0);
  c1.affine.b = 1.0;
  ConvexExpr c2;  // 1 - x <= 0
  c2.affine.add(0, -1.0);
  c2.affine.b = 1.0;
  bad.ineqs.push_back(c1);
  bad.ineqs.push_back(c2);
  const auto rb = cvx::phase1(bad);
  CHECK_FALSE(rb.feasible);
  CHECK(rb.max_slack >= 0.0);

  // A nonlinear feasible case: 1/x <= 4 with x in (0, 10].
  SubproblemSpec nl = boxed(1, 0.0, 10.0);
  ConvexExpr c3;
  c3.recips.push_back({var(0), 1.0});
  c3.affine.b = -4.0;
  nl.ineqs.push_back(c3);
  const auto rn = cvx::phase1(nl);
  CHECK(rn.feasible);
  CHECK(1.0 / rn.x[0] < 4.0);
}

TEST_CASE("solver rejects infeasible starts and unbounded problems") {
  SubproblemSpec s = boxed(1, 0.0, 1.0);
  ConvexExpr g;  // x - 0.5 <= 0
  g.affine.add(0, 1.0);
  g.affine.b = -0.5;
  s.ineqs.push_back(g);
  s.objective.affine.add(0, 1.0);
  CHECK_THROWS_AS(cvx::solve(s, std::vector<double>{0.9}, 1e-6), cvx::CvxError);

  SubproblemSpec ub;
  ub.n = 1;
  ub.lo.assign(1, -cvx::kInf);
  ub.hi.assign(1, cvx::kInf);
  ub.objective.affine.add(0, 1.0);
  bool threw = false;
  try {
    cvx::solve(ub, std::vector<double>{0.0}, 1e-6);
  } catch (const cvx::CvxError& e) {
    threw = true;
    CHECK(e.kind == cvx::CvxError::Kind::kUnbounded);
  }
  CHECK(threw);
}

TEST_CASE("check_kkt on an analytic QP") {
  // min (x-2)^2 s.t. x <= 1: solution x = 1, multiplier 2.
  SubproblemSpec s;
  s.n = 1;
  s.lo.assign(1, -cvx::kInf);
  s.hi.assign(1, cvx::kInf);
  AffForm a = var(0);
  a.b = -2.0;
  s.objective.quads.push_back({a, 1.0});
  ConvexExpr g;
  g.affine.add(0, 1.0);
  g.affine.b = -1.0;
  s.ineqs.push_back(g);

  cvx::PrimalSolution manual;
  manual.x = {1.0};
  manual.ineq_mult = {2.0};
  manual.lo_mult = {0.0};
  manual.hi_mult = {0.0};
  const auto rep = cvx::check_kkt(s, manual, 1e-8);
  CHECK(rep.max_residual() < 1e-10);

  // Perturbing the point grows the residual.
  cvx::PrimalSolution off = manual;
  off.x = {0.9};
  const auto rep2 = cvx::check_kkt(s, off, 1e-8);
  CHECK(rep2.max_residual() > 1e-3);

  // The solver's own output passes its reported residuals.
  const auto sol = cvx::solve(s, std::vector<double>{0.0}, 1e-8);
  const auto rep3 = cvx::check_kkt(s, sol, 1e-8);
  CHECK(rep3.stationarity < 1e-6);
  CHECK(rep3.complementarity < 1e-6);
  CHECK(rep3.primal_ineq < 1e-10);
}

TEST_CASE("spec dump emits one term per line") {
  SubproblemSpec s = boxed(2, 0.0, 1.0);
  s.objective.affine.add(0, 1.0);
  s.objective.quads.push_back({var(1), 2.0});
  ConvexExpr g;
  g.recips.push_back({var(0, 1.0, 0.1), 0.5});
  g.affine.b = -3.0;
  s.ineqs.push_back(g);
  std::ostringstream os;
  cvx::dump(s, os);
  const std::string text = os.str();
  CHECK(text.find("vars 2") != std::string::npos);
  CHECK(text.find("quad") != std::string::npos);
  CHECK(text.find("recip") != std::string::npos);
  CHECK(text.find("box 1") != std::string::npos);
}
