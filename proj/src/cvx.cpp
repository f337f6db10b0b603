#include "flmimo/cvx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>

#include "flmimo/kernels.hpp"
#include "flmimo/linalg.hpp"

namespace flmimo::cvx {

namespace {

void canonicalize(AffForm& a) {
  if (a.idx.empty()) return;
  std::vector<std::pair<int, double>> entries(a.idx.size());
  for (size_t t = 0; t < a.idx.size(); ++t) entries[t] = {a.idx[t], a.coef[t]};
  std::sort(entries.begin(), entries.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  a.idx.clear();
  a.coef.clear();
  for (const auto& [i, c] : entries) {
    if (!a.idx.empty() && a.idx.back() == i) {
      a.coef.back() += c;
    } else {
      a.idx.push_back(i);
      a.coef.push_back(c);
    }
  }
  // Keep exact zeros out of the support.
  size_t w = 0;
  for (size_t t = 0; t < a.idx.size(); ++t) {
    if (a.coef[t] != 0.0) {
      a.idx[w] = a.idx[t];
      a.coef[w] = a.coef[t];
      ++w;
    }
  }
  a.idx.resize(w);
  a.coef.resize(w);
}

void merge_sorted(std::vector<int>& dst, const std::vector<int>& src) {
  std::vector<int> out;
  out.reserve(dst.size() + src.size());
  std::set_union(dst.begin(), dst.end(), src.begin(), src.end(), std::back_inserter(out));
  dst.swap(out);
}

}  // namespace

double ConvexExpr::eval(std::span<const double> x) const {
  double v = affine.eval(x);
  for (const auto& q : quads) {
    const double g = q.a.eval(x);
    v += q.c * g * g;
  }
  for (const auto& r : recips) {
    const double g = r.g.eval(x);
    if (!(g > 0)) return kInf;
    v += r.c / g;
  }
  for (const auto& nl : neglogs) {
    const double g = nl.g.eval(x);
    if (!(g > 0)) return kInf;
    v -= nl.c * std::log(g);
  }
  return v;
}

double ConvexExpr::domain_slack(std::span<const double> x) const {
  double slack = kInf;
  for (const auto& r : recips) slack = std::min(slack, r.g.eval(x));
  for (const auto& nl : neglogs) slack = std::min(slack, nl.g.eval(x));
  return slack;
}

void ConvexExpr::add_grad(std::span<const double> x, double w, double* g) const {
  for (size_t t = 0; t < affine.idx.size(); ++t) g[affine.idx[t]] += w * affine.coef[t];
  for (const auto& q : quads) {
    const double s = w * 2.0 * q.c * q.a.eval(x);
    for (size_t t = 0; t < q.a.idx.size(); ++t) g[q.a.idx[t]] += s * q.a.coef[t];
  }
  for (const auto& r : recips) {
    const double gv = r.g.eval(x);
    const double s = -w * r.c / (gv * gv);
    for (size_t t = 0; t < r.g.idx.size(); ++t) g[r.g.idx[t]] += s * r.g.coef[t];
  }
  for (const auto& nl : neglogs) {
    const double gv = nl.g.eval(x);
    const double s = -w * nl.c / gv;
    for (size_t t = 0; t < nl.g.idx.size(); ++t) g[nl.g.idx[t]] += s * nl.g.coef[t];
  }
}

std::vector<int> ConvexExpr::support() const {
  auto sorted_of = [](const AffForm& a) {
    std::vector<int> s = a.idx;
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
  };
  std::vector<int> sup = sorted_of(affine);
  for (const auto& q : quads) merge_sorted(sup, sorted_of(q.a));
  for (const auto& r : recips) merge_sorted(sup, sorted_of(r.g));
  for (const auto& nl : neglogs) merge_sorted(sup, sorted_of(nl.g));
  return sup;
}

void SubproblemSpec::check() const {
  auto check_form = [&](const AffForm& a, const char* where) {
    for (int i : a.idx) {
      if (i < 0 || i >= n) {
        throw std::invalid_argument(std::string("spec: variable index out of range in ") + where);
      }
    }
  };
  auto check_expr = [&](const ConvexExpr& e, const char* where) {
    check_form(e.affine, where);
    for (const auto& q : e.quads) {
      if (q.c < 0) throw std::invalid_argument("spec: negative quad coefficient");
      check_form(q.a, where);
    }
    for (const auto& r : e.recips) {
      if (!(r.c > 0)) throw std::invalid_argument("spec: nonpositive recip coefficient");
      check_form(r.g, where);
    }
    for (const auto& nl : e.neglogs) {
      if (!(nl.c > 0)) throw std::invalid_argument("spec: nonpositive neglog coefficient");
      check_form(nl.g, where);
    }
  };
  check_expr(objective, "objective");
  for (const auto& e : ineqs) check_expr(e, "inequality");
  for (const auto& e : eqs) check_form(e.a, "equality");
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n) {
    throw std::invalid_argument("spec: box size mismatch");
  }
  for (int j = 0; j < n; ++j) {
    if (lo[j] > hi[j]) throw std::invalid_argument("spec: empty box");
  }
}

// ---------------------------------------------------------------------------
// Barrier solver internals.
// ---------------------------------------------------------------------------

namespace {

struct PreparedExpr {
  ConvexExpr e;              // canonicalized forms
  std::vector<int> support;  // sorted
};

class Barrier {
 public:
  Barrier(const SubproblemSpec& spec, const SolveOptions& opts)
      : spec_(spec), opts_(opts), n_(spec.n) {
    obj_ = prep(spec.objective);
    cons_.reserve(spec.ineqs.size());
    for (const auto& e : spec.ineqs) cons_.push_back(prep(e));
    m_barrier_ = static_cast<int>(cons_.size());
    for (int j = 0; j < n_; ++j) {
      if (spec.lo[j] > -kInf) ++m_barrier_;
      if (spec.hi[j] < kInf) ++m_barrier_;
    }
    // Equality rows as a dense n x m transpose for the Schur solves.
    m_eq_ = static_cast<int>(spec.eqs.size());
    if (m_eq_ > 0) {
      eqs_ = spec.eqs;
      for (auto& e : eqs_) canonicalize(e.a);
      at_ = linalg::Mat(n_, m_eq_);
      for (int r = 0; r < m_eq_; ++r) {
        for (size_t t = 0; t < eqs_[r].a.idx.size(); ++t) {
          at_.at(eqs_[r].a.idx[t], r) = eqs_[r].a.coef[t];
        }
      }
    }
    H_ = linalg::Mat(n_, n_);
    grad_.resize(n_);
    box_scale_ = 1.0;
    for (int j = 0; j < n_; ++j) {
      if (spec.lo[j] > -kInf) box_scale_ = std::max(box_scale_, std::abs(spec.lo[j]));
      if (spec.hi[j] < kInf) box_scale_ = std::max(box_scale_, std::abs(spec.hi[j]));
    }
  }

  int barrier_terms() const { return m_barrier_; }
  int newton_steps() const { return newton_steps_; }

  // Projects x onto the affine equality manifold (least-squares correction).
  void project_equalities(std::vector<double>& x) const {
    if (m_eq_ == 0) return;
    std::vector<double> r(m_eq_);
    for (int i = 0; i < m_eq_; ++i) r[i] = eqs_[i].a.eval(x);
    linalg::Mat aat(m_eq_, m_eq_);
    double dmax = 1e-30;
    for (int i = 0; i < m_eq_; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = 0;
        for (int v = 0; v < n_; ++v) s += at_.at(v, i) * at_.at(v, j);
        aat.at(i, j) = s;
      }
      dmax = std::max(dmax, aat.at(i, i));
    }
    if (!linalg::cholesky_in_place(aat, 1e-14 * dmax)) {
      throw CvxError(CvxError::Kind::kDomain, "equality rows are numerically dependent");
    }
    for (double& v : r) v = -v;
    linalg::chol_solve(aat, r.data());
    for (int v = 0; v < n_; ++v) {
      double acc = 0;
      for (int i = 0; i < m_eq_; ++i) acc += at_.at(v, i) * r[i];
      x[v] += acc;
    }
  }

  // Strict feasibility slack (most violated inequality/box/domain).
  double strict_slack(std::span<const double> x) const {
    double worst = kInf;
    for (const auto& c : cons_) {
      const double dom = c.e.domain_slack(x);
      if (!(dom > 0)) return -kInf;
      worst = std::min(worst, -c.e.eval(x));
    }
    const double obj_dom = obj_.e.domain_slack(x);
    if (!(obj_dom > 0)) return -kInf;
    for (int j = 0; j < n_; ++j) {
      if (spec_.lo[j] > -kInf) worst = std::min(worst, x[j] - spec_.lo[j]);
      if (spec_.hi[j] < kInf) worst = std::min(worst, spec_.hi[j] - x[j]);
    }
    return worst;
  }

  double merit(std::span<const double> x, double t) const {
    const double f0 = obj_.e.eval(x);
    if (f0 >= kInf) return kInf;
    double psi = t * f0;
    for (const auto& c : cons_) {
      const double s = -c.e.eval(x);
      if (!(s > 0)) return kInf;
      psi -= std::log(s);
    }
    for (int j = 0; j < n_; ++j) {
      if (spec_.lo[j] > -kInf) {
        const double s = x[j] - spec_.lo[j];
        if (!(s > 0)) return kInf;
        psi -= std::log(s);
      }
      if (spec_.hi[j] < kInf) {
        const double s = spec_.hi[j] - x[j];
        if (!(s > 0)) return kInf;
        psi -= std::log(s);
      }
    }
    return psi;
  }

  // One centered Newton iteration at barrier weight t. Returns the Newton
  // decrement squared; the step is taken in place.
  double newton_step(std::vector<double>& x, double t) {
    assemble(x, t);
    // Factor with escalating diagonal regularization.
    double dmax = 1e-300;
    for (int j = 0; j < n_; ++j) dmax = std::max(dmax, H_.at(j, j));
    linalg::Mat L;
    double ridge = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
      L = H_;
      ok = linalg::cholesky_in_place(L, ridge);
      if (!ok) ridge = (ridge == 0 ? std::max(1e-12 * dmax, 1e-12) : ridge * 1e4);
    }
    if (!ok) {
      throw CvxError(CvxError::Kind::kMaxIterations, "newton system factorization failed");
    }

    std::vector<double> dx(n_);
    std::vector<double> u = grad_;
    linalg::trsm_lower_left(L, u.data(), 1, 1);
    if (m_eq_ > 0) {
      linalg::Mat y = at_;
      linalg::trsm_lower_left(L, y.row(0), m_eq_, y.cols);
      linalg::Mat s(m_eq_, m_eq_);
      double smax = 1e-30;
      for (int i = 0; i < m_eq_; ++i) {
        for (int j = 0; j <= i; ++j) {
          double acc = 0;
          for (int v = 0; v < n_; ++v) acc += y.at(v, i) * y.at(v, j);
          s.at(i, j) = acc;
        }
        smax = std::max(smax, s.at(i, i));
      }
      if (!linalg::cholesky_in_place(s, 1e-13 * smax)) {
        throw CvxError(CvxError::Kind::kDomain, "equality rows are numerically dependent");
      }
      // Right-hand side restores any drift off the equality manifold:
      // solve A dx = -(Ax + b), i.e. S w = r_eq - Y^T u.
      std::vector<double> w(m_eq_, 0.0);
      for (int v = 0; v < n_; ++v) kernels::axpy(m_eq_, u[v], y.row(v), w.data());
      for (int i = 0; i < m_eq_; ++i) w[i] = eqs_[i].a.eval(x) - w[i];
      linalg::chol_solve(s, w.data());
      for (int v = 0; v < n_; ++v) u[v] += kernels::dot(y.row(v), w.data(), m_eq_);
    }
    linalg::trsm_lower_trans_left(L, u.data(), 1, 1);
    for (int v = 0; v < n_; ++v) dx[v] = -u[v];

    double lambda_sq = 0;
    for (int v = 0; v < n_; ++v) lambda_sq -= grad_[v] * dx[v];
    if (!(lambda_sq > 0)) return 0.0;

    const double psi0 = merit(x, t);
    std::vector<double> xt(n_);

    // Near the optimum the predicted decrease falls below what the merit can
    // resolve in floating point; take the plain (domain-guarded) Newton step.
    if (lambda_sq <= 1e-9 * (1.0 + std::abs(psi0))) {
      double alpha = 1.0;
      for (int bt = 0; bt < 60; ++bt) {
        for (int v = 0; v < n_; ++v) xt[v] = x[v] + alpha * dx[v];
        if (merit(xt, t) < kInf) {
          x.swap(xt);
          ++newton_steps_;
          check_unbounded(x);
          return lambda_sq;
        }
        alpha *= 0.5;
      }
      ++newton_steps_;
      return 0.0;
    }

    // Backtracking line search on the merit, staying inside every domain.
    const double slope = -lambda_sq;
    double alpha = 1.0;
    for (int bt = 0; bt < 80; ++bt) {
      for (int v = 0; v < n_; ++v) xt[v] = x[v] + alpha * dx[v];
      const double psi = merit(xt, t);
      const bool improved =
          psi < psi0 + 0.25 * alpha * slope || (std::isinf(psi) && psi < 0);
      if (improved && !std::isnan(psi)) {
        x.swap(xt);
        ++newton_steps_;
        check_unbounded(x);
        return lambda_sq;
      }
      alpha *= 0.5;
    }
    // No acceptable step: report stall via a zero decrement.
    ++newton_steps_;
    return 0.0;
  }

  // Newton iterations at fixed t until the decrement drops below dec_tol
  // (or the early-exit predicate fires). Returns the final decrement.
  template <class Pred>
  double center(std::vector<double>& x, double t, double dec_tol, int max_steps, Pred stop) {
    double dec = kInf;
    for (int it = 0; it < max_steps; ++it) {
      if (stop(std::span<const double>(x))) return 0.0;
      if (newton_steps_ >= opts_.max_newton) {
        throw CvxError(CvxError::Kind::kMaxIterations, "newton budget exhausted");
      }
      dec = newton_step(x, t);
      if (dec <= dec_tol) break;
    }
    return dec;
  }

  // Merit gradient recomputed at x (used for stationarity reports).
  const std::vector<double>& last_grad() const { return grad_; }
  void refresh_grad(std::span<const double> x, double t) { assemble(x, t, /*grad_only=*/true); }

  // Least-squares equality multipliers for the current grad_.
  std::vector<double> ls_eq_dual() const {
    if (m_eq_ == 0) return {};
    linalg::Mat aat(m_eq_, m_eq_);
    for (int i = 0; i < m_eq_; ++i) {
      for (int j = 0; j <= i; ++j) {
        double s = 0;
        for (int v = 0; v < n_; ++v) s += at_.at(v, i) * at_.at(v, j);
        aat.at(i, j) = s;
      }
    }
    if (!linalg::cholesky_in_place(aat, 1e-14)) return std::vector<double>(m_eq_, 0.0);
    std::vector<double> rhs(m_eq_, 0.0);
    for (int v = 0; v < n_; ++v) kernels::axpy(m_eq_, -grad_[v], at_.row(v), rhs.data());
    linalg::chol_solve(aat, rhs.data());
    return rhs;
  }

  double stationarity_inf(std::span<const double> x, double t) {
    refresh_grad(x, t);
    std::vector<double> w = ls_eq_dual();
    double r = 0;
    for (int v = 0; v < n_; ++v) {
      double g = grad_[v];
      if (m_eq_ > 0) g += kernels::dot(at_.row(v), w.data(), m_eq_);
      r = std::max(r, std::abs(g));
    }
    return r / t;
  }

  const std::vector<PreparedExpr>& constraints() const { return cons_; }
  const PreparedExpr& objective() const { return obj_; }

 private:
  PreparedExpr prep(const ConvexExpr& e) const {
    PreparedExpr p;
    p.e = e;
    canonicalize(p.e.affine);
    for (auto& q : p.e.quads) canonicalize(q.a);
    for (auto& r : p.e.recips) canonicalize(r.g);
    for (auto& nl : p.e.neglogs) canonicalize(nl.g);
    p.support = p.e.support();
    return p;
  }

  void rank1(const std::vector<int>& idx, const std::vector<double>& coef, double w) {
    for (size_t p = 0; p < idx.size(); ++p) {
      const double wp = w * coef[p];
      double* row = H_.row(idx[p]);
      for (size_t q = 0; q <= p; ++q) row[idx[q]] += wp * coef[q];
    }
  }

  void add_expr_hessian(const PreparedExpr& pe, std::span<const double> x, double w) {
    for (const auto& q : pe.e.quads) rank1(q.a.idx, q.a.coef, w * 2.0 * q.c);
    for (const auto& r : pe.e.recips) {
      const double g = r.g.eval(x);
      rank1(r.g.idx, r.g.coef, w * 2.0 * r.c / (g * g * g));
    }
    for (const auto& nl : pe.e.neglogs) {
      const double g = nl.g.eval(x);
      rank1(nl.g.idx, nl.g.coef, w * nl.c / (g * g));
    }
  }

  void assemble(std::span<const double> x, double t, bool grad_only = false) {
    std::fill(grad_.begin(), grad_.end(), 0.0);
    if (!grad_only) H_.set_zero();
    obj_.e.add_grad(x, t, grad_.data());
    if (!grad_only) add_expr_hessian(obj_, x, t);

    std::vector<double> gsup;
    for (const auto& c : cons_) {
      const double s = -c.e.eval(x);
      c.e.add_grad(x, 1.0 / s, grad_.data());
      if (grad_only) continue;
      add_expr_hessian(c, x, 1.0 / s);
      gsup.assign(c.support.size(), 0.0);
      add_grad_on_support(c, x, gsup);
      const double w = 1.0 / (s * s);
      for (size_t p = 0; p < c.support.size(); ++p) {
        const double wp = w * gsup[p];
        double* row = H_.row(c.support[p]);
        for (size_t q = 0; q <= p; ++q) row[c.support[q]] += wp * gsup[q];
      }
    }
    for (int j = 0; j < n_; ++j) {
      if (spec_.lo[j] > -kInf) {
        const double s = x[j] - spec_.lo[j];
        grad_[j] -= 1.0 / s;
        if (!grad_only) H_.at(j, j) += 1.0 / (s * s);
      }
      if (spec_.hi[j] < kInf) {
        const double s = spec_.hi[j] - x[j];
        grad_[j] += 1.0 / s;
        if (!grad_only) H_.at(j, j) += 1.0 / (s * s);
      }
    }
  }

  void add_grad_on_support(const PreparedExpr& pe, std::span<const double> x,
                           std::vector<double>& gsup) const {
    auto scatter = [&](const AffForm& a, double s) {
      for (size_t m = 0; m < a.idx.size(); ++m) {
        const int pos = static_cast<int>(
            std::lower_bound(pe.support.begin(), pe.support.end(), a.idx[m]) -
            pe.support.begin());
        gsup[pos] += s * a.coef[m];
      }
    };
    scatter(pe.e.affine, 1.0);
    for (const auto& q : pe.e.quads) scatter(q.a, 2.0 * q.c * q.a.eval(x));
    for (const auto& r : pe.e.recips) {
      const double g = r.g.eval(x);
      scatter(r.g, -r.c / (g * g));
    }
    for (const auto& nl : pe.e.neglogs) scatter(nl.g, -nl.c / nl.g.eval(x));
  }

  void check_unbounded(std::span<const double> x) const {
    const double limit = std::max(1e10, 1e6 * box_scale_);
    for (double v : x) {
      if (std::abs(v) > limit) {
        throw CvxError(CvxError::Kind::kUnbounded, "iterates diverge; problem appears unbounded");
      }
    }
  }

  const SubproblemSpec& spec_;
  SolveOptions opts_;
  int n_;
  int m_barrier_ = 0;
  int m_eq_ = 0;
  PreparedExpr obj_;
  std::vector<PreparedExpr> cons_;
  std::vector<LinEq> eqs_;
  linalg::Mat at_;  // n x m equality transpose
  linalg::Mat H_;
  std::vector<double> grad_;
  double box_scale_ = 1.0;
  int newton_steps_ = 0;
};

struct NoStop {
  bool operator()(std::span<const double>) const { return false; }
};

}  // namespace

PrimalSolution solve(const SubproblemSpec& spec, std::span<const double> start,
                     const SolveOptions& opts) {
  spec.check();
  Barrier solver(spec, opts);
  std::vector<double> x(start.begin(), start.end());
  if (static_cast<int>(x.size()) != spec.n) {
    throw CvxError(CvxError::Kind::kDomain, "start vector has wrong dimension");
  }
  solver.project_equalities(x);
  if (!(solver.strict_slack(x) > 0)) {
    throw CvxError(CvxError::Kind::kDomain,
                   "start is not strictly feasible; run phase1 first");
  }

  static const bool debug = std::getenv("FLMIMO_CVX_DEBUG") != nullptr;
  const int m = solver.barrier_terms();
  double f0 = spec.objective.eval(x);
  double t = opts.t_init > 0 ? opts.t_init
                             : std::max(1.0, m / (std::abs(f0) + 1.0));
  const int kMaxStages = 64;
  for (int stage = 0; stage < kMaxStages; ++stage) {
    const int steps_before = solver.newton_steps();
    const double dec = solver.center(x, t, 0.0625, 200, NoStop{});
    f0 = spec.objective.eval(x);
    if (debug) {
      std::fprintf(stderr, "[cvx] stage=%d t=%.3e f0=%.6g gap=%.3e steps=%d dec=%.2e\n",
                   stage, t, f0, m / t, solver.newton_steps() - steps_before, dec);
    }
    const double target = opts.tol * (1.0 + std::abs(f0));
    if (m == 0 || m / t <= target) {
      // Polish until the reported stationarity residual meets the contract.
      for (int polish = 0; polish < 12; ++polish) {
        const double res = solver.stationarity_inf(x, t);
        double gnorm = 0;
        {
          std::vector<double> g0(spec.n, 0.0);
          spec.objective.add_grad(x, 1.0, g0.data());
          for (double v : g0) gnorm = std::max(gnorm, std::abs(v));
        }
        if (res <= opts.tol * (1.0 + gnorm)) break;
        if (solver.newton_step(x, t) <= 1e-18) break;
      }
      break;
    }
    if (stage == kMaxStages - 1) {
      throw CvxError(CvxError::Kind::kMaxIterations, "barrier stages exhausted");
    }
    const double t_needed = m / target;
    t = std::min(t * opts.mu_factor, 1.1 * t_needed);
  }

  PrimalSolution sol;
  sol.x = x;
  sol.objective_value = spec.objective.eval(x);
  sol.iterations = solver.newton_steps();
  sol.duality_gap = m > 0 ? m / t : 0.0;
  double worst = 0;
  for (const auto& e : spec.ineqs) worst = std::max(worst, e.eval(x));
  sol.max_ineq_residual = std::max(0.0, worst);
  double eqres = 0;
  for (const auto& e : spec.eqs) eqres = std::max(eqres, std::abs(e.a.eval(x)));
  sol.max_eq_residual = eqres;

  sol.ineq_mult.resize(spec.ineqs.size());
  for (size_t i = 0; i < spec.ineqs.size(); ++i) {
    sol.ineq_mult[i] = 1.0 / (t * (-spec.ineqs[i].eval(x)));
  }
  sol.lo_mult.assign(spec.n, 0.0);
  sol.hi_mult.assign(spec.n, 0.0);
  for (int j = 0; j < spec.n; ++j) {
    if (spec.lo[j] > -kInf) sol.lo_mult[j] = 1.0 / (t * (x[j] - spec.lo[j]));
    if (spec.hi[j] < kInf) sol.hi_mult[j] = 1.0 / (t * (spec.hi[j] - x[j]));
  }
  solver.refresh_grad(x, t);
  std::vector<double> w = solver.ls_eq_dual();
  sol.eq_mult.resize(w.size());
  for (size_t i = 0; i < w.size(); ++i) sol.eq_mult[i] = w[i] / t;
  sol.kkt_residual = solver.stationarity_inf(x, t);
  return sol;
}

PrimalSolution solve(const SubproblemSpec& spec, std::span<const double> start, double tol) {
  SolveOptions opts;
  opts.tol = tol;
  return solve(spec, start, opts);
}

namespace {

// Builds the soft phase-1 program: variables (x, s), objective s, every row
// of `rows` turned into row - s <= 0.
SubproblemSpec phase1_spec(int n, const std::vector<ConvexExpr>& rows,
                           const std::vector<LinEq>& eqs, double s_lo) {
  SubproblemSpec p;
  p.n = n + 1;
  p.objective.affine.add(n, 1.0);
  p.ineqs.reserve(rows.size());
  for (const auto& r : rows) {
    ConvexExpr e = r;
    e.affine.add(n, -1.0);
    p.ineqs.push_back(std::move(e));
  }
  p.eqs = eqs;
  p.lo.assign(p.n, -kInf);
  p.hi.assign(p.n, kInf);
  p.lo[n] = s_lo;
  return p;
}

double form_scale(const AffForm& a) {
  double s = std::abs(a.b);
  for (double c : a.coef) s += std::abs(c);
  return std::max(1.0, s);
}

}  // namespace

Phase1Result phase1(const SubproblemSpec& spec, std::span<const double> hint, double delta) {
  spec.check();
  const int n = spec.n;

  // Stage A: affine-only rows (boxes, affine inequalities, recip/neglog
  // domain margins) so every expression is evaluable afterwards.
  std::vector<ConvexExpr> rows_a;
  for (int j = 0; j < n; ++j) {
    if (spec.lo[j] > -kInf) {
      ConvexExpr e;
      e.affine.b = spec.lo[j];
      e.affine.add(j, -1.0);
      rows_a.push_back(std::move(e));
    }
    if (spec.hi[j] < kInf) {
      ConvexExpr e;
      e.affine.b = -spec.hi[j];
      e.affine.add(j, 1.0);
      rows_a.push_back(std::move(e));
    }
  }
  auto add_domain_rows = [&](const ConvexExpr& e) {
    auto dom = [&](const AffForm& g) {
      ConvexExpr row;
      row.affine = g;
      for (double& c : row.affine.coef) c = -c;
      row.affine.b = -row.affine.b + 1e-7 * form_scale(g);
      rows_a.push_back(std::move(row));  // delta_dom - g <= 0
    };
    for (const auto& r : e.recips) dom(r.g);
    for (const auto& nl : e.neglogs) dom(nl.g);
  };
  add_domain_rows(spec.objective);
  for (const auto& e : spec.ineqs) {
    if (e.quads.empty() && e.recips.empty() && e.neglogs.empty()) {
      rows_a.push_back(e);
    }
    add_domain_rows(e);
  }

  auto run_stage = [&](const std::vector<ConvexExpr>& rows,
                       std::vector<double> x0) -> std::pair<bool, std::vector<double>> {
    double worst = -kInf;
    for (const auto& r : rows) worst = std::max(worst, r.eval(x0));
    if (worst <= -delta) return {true, x0};  // already strictly inside
    if (worst >= kInf) return {false, x0};   // domain broken; stage A should prevent this

    SubproblemSpec p = phase1_spec(n, rows, spec.eqs, -10.0 * (delta + 1.0));
    std::vector<double> start = x0;
    start.push_back(std::max(worst, 0.0) + 1.0 + delta);
    SolveOptions opts;
    opts.tol = std::min(1e-6, 0.1 * delta);
    opts.max_newton = 4000;

    // The barrier machinery drives s down; stop as soon as the true rows are
    // strictly negative.
    Barrier solver(p, opts);
    std::vector<double> x = start;
    solver.project_equalities(x);
    if (!(solver.strict_slack(x) > 0)) {
      // s was chosen above the worst row, so this can only happen through
      // severe scaling issues; widen s and retry once.
      x = start;
      x[n] = std::abs(start[n]) * 1e3 + 1e3;
      solver.project_equalities(x);
      if (!(solver.strict_slack(x) > 0)) {
        return {false, x0};
      }
    }
    auto strictly_inside = [&](std::span<const double> xv) {
      for (const auto& r : rows) {
        if (!(r.eval(xv.first(static_cast<size_t>(n))) <= -delta)) return false;
      }
      return true;
    };
    const int m = solver.barrier_terms();
    double t = std::max(1.0, m / (std::abs(x[n]) + 1.0));
    for (int stage = 0; stage < 64; ++stage) {
      solver.center(x, t, 0.0625, 200, strictly_inside);
      if (strictly_inside(x)) {
        x.resize(n);
        return {true, x};
      }
      if (m / t <= opts.tol * (1.0 + std::abs(x[n])) || x[n] <= p.lo[n] + 1e-6) break;
      t *= opts.mu_factor;
    }
    const bool ok = strictly_inside(x);
    x.resize(n);
    return {ok, x};
  };

  // Starting guess: box centers (or the hint), finite fallbacks for open boxes.
  std::vector<double> x0(n, 0.0);
  if (!hint.empty()) {
    x0.assign(hint.begin(), hint.end());
  } else {
    for (int j = 0; j < n; ++j) {
      const bool has_lo = spec.lo[j] > -kInf, has_hi = spec.hi[j] < kInf;
      if (has_lo && has_hi) x0[j] = 0.5 * (spec.lo[j] + spec.hi[j]);
      else if (has_lo) x0[j] = spec.lo[j] + 1.0;
      else if (has_hi) x0[j] = spec.hi[j] - 1.0;
    }
  }

  auto [ok_a, xa] = run_stage(rows_a, x0);
  Phase1Result res;
  if (!ok_a) {
    res.feasible = false;
    res.x = xa;
    double worst = -kInf;
    for (const auto& r : rows_a) worst = std::max(worst, r.eval(res.x));
    res.max_slack = worst;
    return res;
  }

  // Stage B: the full inequality set from an evaluable point.
  std::vector<ConvexExpr> rows_b = rows_a;
  for (const auto& e : spec.ineqs) {
    if (!(e.quads.empty() && e.recips.empty() && e.neglogs.empty())) {
      rows_b.push_back(e);
    }
  }
  auto [ok_b, xb] = run_stage(rows_b, xa);
  res.feasible = ok_b;
  res.x = xb;
  double worst = -kInf;
  for (const auto& e : spec.ineqs) worst = std::max(worst, e.eval(res.x));
  for (int j = 0; j < n; ++j) {
    if (spec.lo[j] > -kInf) worst = std::max(worst, spec.lo[j] - res.x[j]);
    if (spec.hi[j] < kInf) worst = std::max(worst, res.x[j] - spec.hi[j]);
  }
  res.max_slack = worst;
  return res;
}

Phase1Result phase1(const SubproblemSpec& spec, double delta) {
  return phase1(spec, std::span<const double>(), delta);
}

double min_slack(const SubproblemSpec& spec, std::span<const double> x) {
  double worst = kInf;
  if (!(spec.objective.domain_slack(x) > 0)) return -kInf;
  for (const auto& e : spec.ineqs) {
    if (!(e.domain_slack(x) > 0)) return -kInf;
    worst = std::min(worst, -e.eval(x));
  }
  for (int j = 0; j < spec.n; ++j) {
    if (spec.lo[j] > -kInf) worst = std::min(worst, x[j] - spec.lo[j]);
    if (spec.hi[j] < kInf) worst = std::min(worst, spec.hi[j] - x[j]);
  }
  return worst;
}

double KktReport::max_residual() const {
  return std::max({stationarity, complementarity, primal_ineq, primal_eq});
}

KktReport check_kkt(const SubproblemSpec& spec, const PrimalSolution& sol, double /*tol*/) {
  KktReport rep;
  const std::span<const double> x(sol.x);
  std::vector<double> g(spec.n, 0.0);
  spec.objective.add_grad(x, 1.0, g.data());
  double gnorm = 1.0;
  for (double v : g) gnorm = std::max(gnorm, std::abs(v));

  for (size_t i = 0; i < spec.ineqs.size(); ++i) {
    const double fi = spec.ineqs[i].eval(x);
    rep.primal_ineq = std::max(rep.primal_ineq, fi);
    const double li = i < sol.ineq_mult.size() ? sol.ineq_mult[i] : 0.0;
    rep.complementarity = std::max(rep.complementarity, std::abs(li * fi));
    if (li != 0.0) spec.ineqs[i].add_grad(x, li, g.data());
  }
  rep.primal_ineq = std::max(0.0, rep.primal_ineq);
  for (int j = 0; j < spec.n; ++j) {
    if (spec.lo[j] > -kInf) {
      const double s = sol.x[j] - spec.lo[j];
      rep.primal_ineq = std::max(rep.primal_ineq, -s);
      const double lm = j < static_cast<int>(sol.lo_mult.size()) ? sol.lo_mult[j] : 0.0;
      rep.complementarity = std::max(rep.complementarity, std::abs(lm * s));
      g[j] -= lm;
    }
    if (spec.hi[j] < kInf) {
      const double s = spec.hi[j] - sol.x[j];
      rep.primal_ineq = std::max(rep.primal_ineq, -s);
      const double hm = j < static_cast<int>(sol.hi_mult.size()) ? sol.hi_mult[j] : 0.0;
      rep.complementarity = std::max(rep.complementarity, std::abs(hm * s));
      g[j] += hm;
    }
  }
  for (size_t r = 0; r < spec.eqs.size(); ++r) {
    rep.primal_eq = std::max(rep.primal_eq, std::abs(spec.eqs[r].a.eval(x)));
    const double nu = r < sol.eq_mult.size() ? sol.eq_mult[r] : 0.0;
    for (size_t t = 0; t < spec.eqs[r].a.idx.size(); ++t) {
      g[spec.eqs[r].a.idx[t]] += nu * spec.eqs[r].a.coef[t];
    }
  }
  double stat = 0;
  for (double v : g) stat = std::max(stat, std::abs(v));
  rep.stationarity = stat / gnorm;
  return rep;
}

namespace {

void dump_form(std::ostream& os, const AffForm& a) {
  os << "(";
  for (size_t t = 0; t < a.idx.size(); ++t) {
    if (t) os << " ";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "x%d*%.17g", a.idx[t], a.coef[t]);
    os << buf;
  }
  char buf[48];
  std::snprintf(buf, sizeof(buf), " + %.17g)", a.b);
  os << buf;
}

void dump_expr(std::ostream& os, const char* tag, int id, const ConvexExpr& e) {
  char buf[64];
  os << tag << " " << id << " affine ";
  dump_form(os, e.affine);
  os << "\n";
  for (const auto& q : e.quads) {
    std::snprintf(buf, sizeof(buf), "%s %d quad %.17g ", tag, id, q.c);
    os << buf;
    dump_form(os, q.a);
    os << "\n";
  }
  for (const auto& r : e.recips) {
    std::snprintf(buf, sizeof(buf), "%s %d recip %.17g ", tag, id, r.c);
    os << buf;
    dump_form(os, r.g);
    os << "\n";
  }
  for (const auto& nl : e.neglogs) {
    std::snprintf(buf, sizeof(buf), "%s %d neglog %.17g ", tag, id, nl.c);
    os << buf;
    dump_form(os, nl.g);
    os << "\n";
  }
}

}  // namespace

void dump(const SubproblemSpec& spec, std::ostream& os) {
  os << "vars " << spec.n << "\n";
  dump_expr(os, "obj", 0, spec.objective);
  for (size_t i = 0; i < spec.ineqs.size(); ++i) {
    dump_expr(os, "ineq", static_cast<int>(i), spec.ineqs[i]);
  }
  for (size_t r = 0; r < spec.eqs.size(); ++r) {
    os << "eq " << r << " ";
    dump_form(os, spec.eqs[r].a);
    os << "\n";
  }
  char buf[96];
  for (int j = 0; j < spec.n; ++j) {
    std::snprintf(buf, sizeof(buf), "box %d %.17g %.17g\n", j, spec.lo[j], spec.hi[j]);
    os << buf;
  }
}

}  // namespace flmimo::cvx
