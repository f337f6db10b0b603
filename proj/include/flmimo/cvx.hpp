/**
 * @file cvx.hpp
 * @brief Structured smooth convex programs and a log-barrier interior-point
 *        solver for them.
 *
 * Expressions are sums of four term families over sparse affine forms
 * g(x) = a^T x + b:
 *   affine        g(x)
 *   quads         c * g(x)^2            with c >= 0
 *   recips        c / g(x)              with c > 0, domain g > 0
 *   neglogs       -c * log g(x)         with c > 0, domain g > 0
 * Every such expression is convex on its domain, and gradients/Hessians are
 * closed-form rank-one updates, which is what the Newton steps exploit.
 */
#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flmimo::cvx {

inline constexpr double kInf = 1e300;

// Sparse affine form a^T x + b. Indices need not be sorted; repeated indices
// accumulate.
struct AffForm {
  std::vector<int> idx;
  std::vector<double> coef;
  double b = 0;

  void add(int i, double c) {
    idx.push_back(i);
    coef.push_back(c);
  }
  double eval(std::span<const double> x) const {
    double v = b;
    for (size_t t = 0; t < idx.size(); ++t) v += coef[t] * x[idx[t]];
    return v;
  }
};

struct QuadTerm {
  AffForm a;
  double c = 0;
};
struct RecipTerm {
  AffForm g;
  double c = 0;
};
struct NegLogTerm {
  AffForm g;
  double c = 0;
};

struct ConvexExpr {
  AffForm affine;
  std::vector<QuadTerm> quads;
  std::vector<RecipTerm> recips;
  std::vector<NegLogTerm> neglogs;

  // Value at x; +inf outside the recip/neglog domain.
  double eval(std::span<const double> x) const;
  // Smallest recip/neglog domain slack min_g g(x); +inf when there are none.
  double domain_slack(std::span<const double> x) const;
  // g += w * grad F(x) (dense g of size n).
  void add_grad(std::span<const double> x, double w, double* g) const;
  // Sorted unique variable indices.
  std::vector<int> support() const;
};

struct LinEq {
  AffForm a;  // a^T x + b = 0
};

struct SubproblemSpec {
  int n = 0;
  ConvexExpr objective;
  std::vector<ConvexExpr> ineqs;  // each expression <= 0
  std::vector<LinEq> eqs;
  std::vector<double> lo, hi;  // per-variable box; +-kInf marks absent sides

  // Structural checks (sizes, term-coefficient signs). Throws
  // std::invalid_argument.
  void check() const;
};

struct PrimalSolution {
  std::vector<double> x;
  double objective_value = 0;
  double max_ineq_residual = 0;
  double max_eq_residual = 0;
  double kkt_residual = 0;
  double duality_gap = 0;
  int iterations = 0;  // Newton steps spent

  // Multipliers for check_kkt: general inequalities, box sides, equalities.
  std::vector<double> ineq_mult, lo_mult, hi_mult, eq_mult;
};

struct CvxError : std::runtime_error {
  enum class Kind { kInfeasible, kUnbounded, kMaxIterations, kDomain };
  Kind kind;
  CvxError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct SolveOptions {
  double tol = 1e-6;
  int max_newton = 2000;
  double t_init = 0;        // 0 selects automatically from the objective scale
  double mu_factor = 10.0;  // barrier weight growth per centering stage
};

/**
 * Minimizes the spec from a start that is strictly feasible for the
 * inequalities, boxes, and term domains (equalities may be violated; the
 * start is projected onto them first). Returns a point with duality gap and
 * KKT residual below tol (relative to the objective scale).
 *
 * Throws CvxError on domain violations at the start, unboundedness, or
 * exhausted iteration budget.
 */
PrimalSolution solve(const SubproblemSpec& spec, std::span<const double> start,
                     const SolveOptions& opts);
PrimalSolution solve(const SubproblemSpec& spec, std::span<const double> start,
                     double tol);

struct Phase1Result {
  bool feasible = false;
  std::vector<double> x;
  // max_i F_i at the returned point: negative slack when feasible, the
  // infeasibility certificate value otherwise.
  double max_slack = 0;
};

// Finds a strictly feasible point (all inequalities below -delta) or reports
// that none exists. An optional hint seeds the search.
Phase1Result phase1(const SubproblemSpec& spec, double delta = 1e-8);
Phase1Result phase1(const SubproblemSpec& spec, std::span<const double> hint,
                    double delta = 1e-8);

// Smallest slack of x across inequalities, boxes, and term domains
// (negative when infeasible, -kInf when a recip/neglog domain is violated).
double min_slack(const SubproblemSpec& spec, std::span<const double> x);

struct KktReport {
  double stationarity = 0;
  double complementarity = 0;
  double primal_ineq = 0;
  double primal_eq = 0;
  double max_residual() const;
};

// Recomputes first-order residuals at (solution.x, solution multipliers).
KktReport check_kkt(const SubproblemSpec& spec, const PrimalSolution& sol,
                    double tol);

// Text dump, one term per line, for external verification.
void dump(const SubproblemSpec& spec, std::ostream& os);

}  // namespace flmimo::cvx
