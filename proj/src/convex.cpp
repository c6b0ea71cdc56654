#include "cato/convex.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "cato/model.hpp"

namespace cato {

double SmoothFn::eval(const Eigen::VectorXd& x) const {
  return eval_derivs(x, nullptr, nullptr);
}

double SmoothFn::eval_derivs(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                             Eigen::MatrixXd* hess) const {
  double v = constant;
  if (lin.size() > 0) {
    v += lin.dot(x);
    if (grad) *grad += lin;
  }
  if (quad.size() > 0) {
    v += 0.5 * x.dot(quad * x);
    if (grad) grad->noalias() += quad * x;
    if (hess) *hess += quad;
  }
  for (const ExpTerm& t : exp_terms) {
    const double e = t.coef * std::exp(t.a.dot(x));
    v += e;
    if (grad) grad->noalias() += e * t.a;
    if (hess) hess->noalias() += e * (t.a * t.a.transpose());
  }
  for (const RateTerm& t : rate_terms) {
    const double up = t.beta0 * std::exp(x[t.p_index]);
    const double S = std::log1p(up);
    const double E = t.a0 * std::exp(t.a1 * x[t.p_index] + t.y.dot(x));
    const double val = E / S;
    v += val;
    if (grad || hess) {
      const double g = up / (1.0 + up);  // dS/dxp
      TermVec tv = t.y;
      tv[t.p_index] += t.a1 - g / S;
      if (grad) grad->noalias() += val * tv;
      if (hess) {
        hess->noalias() += val * (tv * tv.transpose());
        const double gp = g * (1.0 - g);
        (*hess)(t.p_index, t.p_index) += val * (g * g - gp * S) / (S * S);
      }
    }
  }
  return v;
}

namespace {

constexpr double kNewtonTol = 1e-10;  // Newton decrement^2 / 2

// Barrier value/derivatives for phi = t*cost.x - sum log(gaps).
// Returns false when x is not strictly inside the constraint set.
bool barrier_eval(const ConvexProblem& P, double t, const Eigen::VectorXd& x,
                  double* phi, Eigen::VectorXd* g, Eigen::MatrixXd* H) {
  double obj = P.cost.dot(x);
  if (g) *g = P.cost;
  if (H) H->setZero();
  obj += P.objective.eval_derivs(x, g, H);
  if (g) *g *= t;
  if (H) *H *= t;
  double val = t * obj;
  Eigen::VectorXd gf(P.n);
  Eigen::MatrixXd Hf(P.n, P.n);
  for (const SmoothIneq& c : P.ineqs) {
    double fv;
    if (g || H) {
      gf.setZero();
      Hf.setZero();
      fv = c.fn.eval_derivs(x, g ? &gf : nullptr, H ? &Hf : nullptr);
    } else {
      fv = c.fn.eval(x);
    }
    const double gap = c.rhs - fv;
    if (!(gap > 0.0) || !std::isfinite(gap)) return false;
    val -= std::log(gap);
    if (g) g->noalias() += gf / gap;
    if (H) H->noalias() += Hf / gap + (gf * gf.transpose()) / (gap * gap);
  }
  for (const LinearIneq& c : P.lin) {
    const double gap = c.b - c.a.dot(x);
    if (!(gap > 0.0)) return false;
    val -= std::log(gap);
    if (g) g->noalias() += c.a / gap;
    if (H) H->noalias() += (c.a * c.a.transpose()) / (gap * gap);
  }
  for (int k = 0; k < P.n; ++k) {
    const double g1 = x[k] - P.lb[k], g2 = P.ub[k] - x[k];
    if (!(g1 > 0.0) || !(g2 > 0.0)) return false;
    val -= std::log(g1) + std::log(g2);
    if (g) (*g)[k] += -1.0 / g1 + 1.0 / g2;
    if (H) (*H)(k, k) += 1.0 / (g1 * g1) + 1.0 / (g2 * g2);
  }
  if (!std::isfinite(val)) return false;
  if (phi) *phi = val;
  return true;
}

// Worst relative slack over the smooth/linear constraints (negative =
// violated); box constraints are not included (kept strict by the barrier).
double worst_slack(const ConvexProblem& P, const Eigen::VectorXd& x) {
  double worst = kInf;
  for (const SmoothIneq& c : P.ineqs) {
    const double slack = (c.rhs - c.fn.eval(x)) / std::max(1.0, std::abs(c.rhs));
    worst = std::min(worst, slack);
  }
  for (const LinearIneq& c : P.lin) {
    const double slack = (c.b - c.a.dot(x)) / std::max(1.0, std::abs(c.b));
    worst = std::min(worst, slack);
  }
  return worst;
}

// Damped Newton minimization of the centering objective at fixed t.
// `stop` (optional) aborts early when it returns true.
Eigen::VectorXd centering(const ConvexProblem& P, double t, Eigen::VectorXd x,
                          const BarrierOptions& opts,
                          const std::function<bool(const Eigen::VectorXd&)>& stop,
                          bool* stopped, bool* converged = nullptr) {
  Eigen::VectorXd g(P.n), xn(P.n);
  Eigen::MatrixXd H(P.n, P.n);
  if (converged) *converged = false;
  for (int it = 0; it < opts.max_newton; ++it) {
    double phi;
    if (!barrier_eval(P, t, x, &phi, &g, &H))
      throw SolverError("convex solver: iterate left the feasible region");
    // Solve H d = -g, escalating the diagonal if the factorization is not
    // usable as a descent direction.
    Eigen::VectorXd d;
    double mu = 0.0;
    for (int tries = 0;; ++tries) {
      Eigen::MatrixXd Hs = H;
      if (mu > 0.0) Hs.diagonal().array() += mu;
      d = Hs.ldlt().solve(-g);
      const bool descent = d.allFinite() && g.dot(d) < 0.0;
      if (descent) break;
      if (tries > 12) throw SolverError("convex solver: cannot build descent step");
      mu = mu == 0.0 ? 1e-10 * std::max(1.0, H.diagonal().maxCoeff()) : mu * 100.0;
    }
    const double lambda2 = -g.dot(d);
    if (0.5 * lambda2 < kNewtonTol) {
      if (converged) *converged = true;
      break;
    }
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + alpha * d;
      double phin;
      if (barrier_eval(P, t, xn, &phin, nullptr, nullptr) &&
          phin <= phi + 0.25 * alpha * g.dot(d)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Line-search stall: no representable step improves phi.  Treat it as
      // converged when the predicted decrease is below the rounding noise of
      // phi itself (the Armijo test cannot distinguish anything smaller).
      if (converged)
        *converged = 0.5 * lambda2 <
                     1e-6 + 16.0 * std::numeric_limits<double>::epsilon() * std::abs(phi);
      break;
    }
    x = xn;
    if (stop && stop(x)) {
      if (stopped) *stopped = true;
      return x;
    }
  }
  return x;
}

int constraint_count(const ConvexProblem& P) {
  return static_cast<int>(P.ineqs.size() + P.lin.size()) + 2 * P.n;
}

Eigen::VectorXd start_point(const ConvexProblem& P) {
  if (P.x_init.size() == P.n) {
    Eigen::VectorXd x = P.x_init;
    for (int k = 0; k < P.n; ++k) {
      const double w = P.ub[k] - P.lb[k];
      x[k] = std::clamp(x[k], P.lb[k] + 0.02 * w, P.ub[k] - 0.02 * w);
    }
    return x;
  }
  return 0.5 * (P.lb + P.ub);
}

// Extends the problem by one slack variable s: constraint i becomes
// f_i(x) - sigma_i * s <= rhs_i with sigma_i = max(1, violation_i(x0) + 1),
// and the phase-I program is min s.  Scaling the slack by the initial
// violation keeps every gap at one unit from the start point (x0, s=1), so
// the Newton iterates cross an O(1) distance to reach s <= 0 even when the
// raw constraint values differ by many orders of magnitude.  s <= 0 still
// implies feasibility of the original problem.
ConvexProblem phase1_problem(const ConvexProblem& P, const Eigen::VectorXd& x0) {
  ConvexProblem Q;
  Q.n = P.n + 1;
  Q.cost = Eigen::VectorXd::Zero(Q.n);
  Q.cost[P.n] = 1.0;
  Q.lb.resize(Q.n);
  Q.ub.resize(Q.n);
  Q.lb.head(P.n) = P.lb;
  Q.ub.head(P.n) = P.ub;
  Q.lb[P.n] = -1e3;
  Q.ub[P.n] = 2.0;
  for (const SmoothIneq& c : P.ineqs) {
    const double sigma = std::max(1.0, c.fn.eval(x0) - c.rhs + 1.0);
    SmoothIneq e;
    e.rhs = c.rhs;
    e.fn.constant = c.fn.constant;
    e.fn.lin = Eigen::VectorXd::Zero(Q.n);
    if (c.fn.lin.size() > 0) e.fn.lin.head(P.n) = c.fn.lin;
    e.fn.lin[P.n] = -sigma;
    if (c.fn.quad.size() > 0) {
      e.fn.quad = Eigen::MatrixXd::Zero(Q.n, Q.n);
      e.fn.quad.topLeftCorner(P.n, P.n) = c.fn.quad;
    }
    for (const ExpTerm& t : c.fn.exp_terms) {
      ExpTerm et = t;
      et.a = TermVec::Zero(Q.n);
      et.a.head(P.n) = t.a;
      e.fn.exp_terms.push_back(std::move(et));
    }
    for (const RateTerm& t : c.fn.rate_terms) {
      RateTerm rt = t;
      rt.y = TermVec::Zero(Q.n);
      rt.y.head(P.n) = t.y;
      e.fn.rate_terms.push_back(std::move(rt));
    }
    Q.ineqs.push_back(std::move(e));
  }
  for (const LinearIneq& c : P.lin) {
    const double sigma = std::max(1.0, c.a.dot(x0) - c.b + 1.0);
    LinearIneq e;
    e.b = c.b;
    e.a = Eigen::VectorXd::Zero(Q.n);
    e.a.head(P.n) = c.a;
    e.a[P.n] = -sigma;
    Q.lin.push_back(std::move(e));
  }
  return Q;
}

}  // namespace

std::optional<Eigen::VectorXd> minimize_convex(const ConvexProblem& P,
                                               const BarrierOptions& opts) {
  if (P.n <= 0 || P.lb.size() != P.n || P.ub.size() != P.n || P.cost.size() != P.n)
    throw std::invalid_argument("minimize_convex: malformed problem");
  for (int k = 0; k < P.n; ++k)
    if (!(P.lb[k] < P.ub[k]))
      throw std::invalid_argument("minimize_convex: empty box");

  Eigen::VectorXd x = start_point(P);

  // Phase I when the seed is not comfortably interior.
  if (worst_slack(P, x) < 1e-6) {
    ConvexProblem Q = phase1_problem(P, x);
    Eigen::VectorXd z(Q.n);
    z.head(P.n) = x;
    z[P.n] = 1.0;
    auto feasible_now = [&](const Eigen::VectorXd& zz) {
      return worst_slack(P, zz.head(P.n)) > 1e-7;
    };
    bool stopped = false;
    bool centered = false;
    const int m = constraint_count(Q);
    double t = 1.0;
    for (int outer = 0; outer < opts.max_outer && !stopped; ++outer) {
      z = centering(Q, t, z, opts, feasible_now, &stopped, &centered);
      // Weak duality at a centered point: min s >= s - m/t, so a positive
      // bound already proves that no feasible point exists.
      if (!stopped && centered && z[P.n] - static_cast<double>(m) / t > 0.0)
        return std::nullopt;
      if (!stopped && static_cast<double>(m) / t <= 1e-10) break;
      t *= 10.0;
    }
    if (!stopped) {
      if (!centered)
        throw SolverError("convex solver: phase I stalled without a verdict");
      if (z[P.n] >= -opts.feas_margin) return std::nullopt;
    }
    x = z.head(P.n);
  }

  const int m = constraint_count(P);
  double t = 1.0;
  for (int outer = 0; outer < opts.max_outer; ++outer) {
    x = centering(P, t, x, opts, nullptr, nullptr);
    const double gap_ref = 1.0 + std::abs(P.cost.dot(x) + P.objective.eval(x));
    if (static_cast<double>(m) / t <= opts.gap_tol * gap_ref) return x;
    t *= 10.0;
  }
  throw SolverError("convex solver: outer iteration cap exceeded");
}

ConvexityReport check_convexity(const ConvexProblem& P, int n_points,
                                std::uint64_t seed) {
  ConvexityReport rep;
  rep.worst_ratio = kInf;
  std::mt19937_64 rng(seed);
  auto uni = [&] { return (rng() >> 11) * 0x1.0p-53; };
  Eigen::VectorXd x(P.n);
  Eigen::MatrixXd H(P.n, P.n);
  for (int it = 0; it < n_points; ++it) {
    for (int k = 0; k < P.n; ++k) {
      const double w = P.ub[k] - P.lb[k];
      x[k] = P.lb[k] + (0.05 + 0.9 * uni()) * w;
    }
    for (const SmoothIneq& c : P.ineqs) {
      for (int i = 0; i < P.n; ++i) {
        const double hi = 1e-4 * std::max(1.0, std::abs(x[i]));
        for (int j = 0; j <= i; ++j) {
          const double hj = 1e-4 * std::max(1.0, std::abs(x[j]));
          Eigen::VectorXd xx = x;
          auto at = [&](double di, double dj) {
            xx = x;
            xx[i] += di;
            xx[j] += dj;
            return c.fn.eval(xx);
          };
          auto cross = [&](double s) {
            return (at(s * hi, s * hj) - at(s * hi, -s * hj) -
                    at(-s * hi, s * hj) + at(-s * hi, -s * hj)) /
                   (4.0 * s * s * hi * hj);
          };
          // Richardson-extrapolated central difference: the single-step
          // stencil cannot be simultaneously below roundoff and below
          // truncation once exponents of ~30 appear in the log domain.
          const double v = (4.0 * cross(1.0) - cross(2.0)) / 3.0;
          H(i, j) = v;
          H(j, i) = v;
        }
      }
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      const double lo = es.eigenvalues().minCoeff();
      const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
      rep.worst_ratio = std::min(rep.worst_ratio, lo / (1.0 + norm));
      ++rep.points_checked;
    }
  }
  if (rep.points_checked == 0) rep.worst_ratio = 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Subproblem builders.

namespace {

enum Var { W = 0, FU, FF, P_, R, WF, D_, NV };

struct Layout {
  std::array<int, NV> idx{};
  std::array<double, NV> fixv{};
  int n = 0;
  Layout() { idx.fill(-2); }  // -2 = absent, -1 = fixed
  void add(Var v) { idx[v] = n++; }
  void fix(Var v, double logval) {
    idx[v] = -1;
    fixv[v] = logval;
  }
};

using Powers = std::initializer_list<std::pair<Var, double>>;

void add_exp(std::vector<ExpTerm>& list, const Layout& L, double coef, Powers pw) {
  if (coef == 0.0) return;
  ExpTerm t;
  t.a = TermVec::Zero(L.n);
  for (const auto& [v, e] : pw) {
    if (L.idx[v] >= 0)
      t.a[L.idx[v]] += e;
    else
      coef *= std::exp(e * L.fixv[v]);
  }
  t.coef = coef;
  list.push_back(std::move(t));
}

void add_rate(std::vector<RateTerm>& list, const Layout& L, double a0, double a1,
              Powers ys, double b0) {
  if (a0 == 0.0) return;
  RateTerm t;
  t.a1 = a1;
  t.beta0 = b0;
  t.p_index = L.idx[P_];
  t.y = TermVec::Zero(L.n);
  for (const auto& [v, e] : ys) {
    if (L.idx[v] >= 0)
      t.y[L.idx[v]] += e;
    else
      a0 *= std::exp(e * L.fixv[v]);
  }
  t.a0 = a0;
  list.push_back(std::move(t));
}

struct TermBag {
  std::vector<ExpTerm> t_exp, e_exp;
  std::vector<RateTerm> t_rate, e_rate;
  double t_const = 0.0;
};

// Device compute + uplink terms common to every offload mode.
void add_user_side(TermBag& bag, const Layout& L, const UserProfile& u, double b0) {
  const CompressionModel& co = u.comp_user;
  const double ln2 = std::log(2.0);
  const double c_base = u.c_local + co.gamma0 * co.gamma3;
  const double c_pow = co.gamma0 * co.gamma1;
  add_exp(bag.t_exp, L, c_base, {{FU, -1.0}});
  add_exp(bag.t_exp, L, c_pow, {{W, co.gamma2}, {FU, -1.0}});
  add_rate(bag.t_rate, L, u.b_in * ln2, 0.0, {{W, -1.0}, {R, -1.0}}, b0);
  add_exp(bag.e_exp, L, u.alpha * c_base, {{FU, 2.0}});
  add_exp(bag.e_exp, L, u.alpha * c_pow, {{W, co.gamma2}, {FU, 2.0}});
  add_rate(bag.e_rate, L, u.b_in * ln2, 1.0, {{W, -1.0}}, b0);
  add_rate(bag.e_rate, L, u.p_circuit * u.b_in * ln2, 0.0, {{W, -1.0}}, b0);
}

struct Built {
  ConvexProblem prob;
  Layout L;
  double b0 = 0.0;
};

void set_box(ConvexProblem& P, const Layout& L, Var v, double lo, double hi) {
  if (L.idx[v] < 0) return;
  P.lb[L.idx[v]] = std::log(lo);
  P.ub[L.idx[v]] = std::log(hi);
}

// Assembles boxes, the cost/delay constraints (scaled by the user weights)
// and the bandwidth-power budget row.
void finish(Built& B, const UserProfile& u, double eta, const TermBag& bag,
            Var objective, const OmegaRange& wr) {
  ConvexProblem& P = B.prob;
  const Layout& L = B.L;
  P.n = L.n;
  P.cost = Eigen::VectorXd::Zero(L.n);
  P.cost[L.idx[objective]] = 1.0;
  P.lb.resize(L.n);
  P.ub.resize(L.n);
  set_box(P, L, W, wr.lo, wr.hi);
  set_box(P, L, FU, u.f_max * 1e-9, u.f_max);
  set_box(P, L, FF, kResourceFloor, kResourceCeil);
  set_box(P, L, D_, kResourceFloor, kResourceCeil);
  const double rho_lo = 1e-6 * u.rho_max;
  set_box(P, L, R, rho_lo, u.rho_max);
  set_box(P, L, P_, 1e-18, u.p_max / rho_lo);
  set_box(P, L, WF, u.comp_fog.omega_min, u.comp_fog.omega_max);

  auto weighted = [&](double wt, double we) {
    SmoothFn fn;
    fn.constant = wt * bag.t_const;
    for (const ExpTerm& t : bag.t_exp)
      if (wt != 0.0) fn.exp_terms.push_back({wt * t.coef, t.a});
    for (const ExpTerm& t : bag.e_exp)
      if (we != 0.0) fn.exp_terms.push_back({we * t.coef, t.a});
    for (const RateTerm& t : bag.t_rate)
      if (wt != 0.0) {
        RateTerm s = t;
        s.a0 *= wt;
        fn.rate_terms.push_back(std::move(s));
      }
    for (const RateTerm& t : bag.e_rate)
      if (we != 0.0) {
        RateTerm s = t;
        s.a0 *= we;
        fn.rate_terms.push_back(std::move(s));
      }
    return fn;
  };
  if (std::isfinite(eta) && (u.w_t > 0.0 || u.w_e > 0.0))
    P.ineqs.push_back({weighted(u.w_t, u.w_e), eta});
  if (std::isfinite(u.t_max)) P.ineqs.push_back({weighted(1.0, 0.0), u.t_max});

  LinearIneq power;  // p * rho <= p_max
  power.a = Eigen::VectorXd::Zero(L.n);
  power.a[L.idx[P_]] = 1.0;
  power.a[L.idx[R]] = 1.0;
  power.b = std::log(u.p_max);
  P.lin.push_back(std::move(power));

  P.x_init = 0.5 * (P.lb + P.ub);
  P.x_init[L.idx[P_]] = std::log(10.0 / B.b0);
}

bool offload_possible(const UserProfile& u, const SystemConfig& sys) {
  return u.rho_max > 0.0 && u.p_max > 0.0 && u.b_in > 0.0 &&
         sys.m0 * u.beta_lin > 0.0;
}

Built make_p3(const UserProfile& u, const SystemConfig& sys, double eta) {
  Built B;
  B.b0 = beta0(u, sys);
  const OmegaRange wr = user_omega_range(u);
  if (wr.empty || !offload_possible(u, sys))
    throw std::invalid_argument("p3: user cannot offload");
  Layout& L = B.L;
  if (wr.hi - wr.lo <= 1e-12 * wr.hi)
    L.fix(W, std::log(std::sqrt(wr.lo * wr.hi)));
  else
    L.add(W);
  L.add(FU);
  L.add(FF);
  L.add(P_);
  L.add(R);

  TermBag bag;
  add_user_side(bag, L, u, B.b0);
  const CompressionModel& de = u.decomp_user;
  add_exp(bag.t_exp, L, u.c_offloadable + de.gamma0 * de.gamma3, {{FF, -1.0}});
  add_exp(bag.t_exp, L, de.gamma0 * de.gamma1, {{W, de.gamma2}, {FF, -1.0}});
  finish(B, u, eta, bag, FF, wr);
  return B;
}

Built make_p4(const UserProfile& u, const SystemConfig& sys, double eta) {
  Built B;
  B.b0 = beta0(u, sys);
  const OmegaRange wr = user_omega_range(u);
  if (wr.empty || !offload_possible(u, sys))
    throw std::invalid_argument("p4: user cannot offload");
  Layout& L = B.L;
  if (wr.hi - wr.lo <= 1e-12 * wr.hi)
    L.fix(W, std::log(std::sqrt(wr.lo * wr.hi)));
  else
    L.add(W);
  L.add(FU);
  L.add(D_);
  L.add(P_);
  L.add(R);

  TermBag bag;
  add_user_side(bag, L, u, B.b0);
  add_exp(bag.t_exp, L, u.b_in, {{W, -1.0}, {D_, -1.0}});
  bag.t_const += sys.t_cloud;
  finish(B, u, eta, bag, D_, wr);
  return B;
}

Built make_p_dk(const UserProfile& u, const SystemConfig& sys, double eta, double d) {
  Built B;
  B.b0 = beta0(u, sys);
  const OmegaRange wr = user_omega_range(u);
  if (wr.empty || !offload_possible(u, sys) || !(d > 0.0))
    throw std::invalid_argument("p_dk: user cannot use the recompress mode");
  Layout& L = B.L;
  if (wr.hi - wr.lo <= 1e-12 * wr.hi)
    L.fix(W, std::log(std::sqrt(wr.lo * wr.hi)));
  else
    L.add(W);
  L.add(FU);
  L.add(FF);
  L.add(P_);
  L.add(R);
  const CompressionModel& cf = u.comp_fog;
  if (cf.omega_max - cf.omega_min <= 1e-12 * cf.omega_max)
    L.fix(WF, std::log(std::sqrt(cf.omega_min * cf.omega_max)));
  else
    L.add(WF);
  L.fix(D_, std::log(d));

  TermBag bag;
  add_user_side(bag, L, u, B.b0);
  const CompressionModel& de = u.decomp_user;
  add_exp(bag.t_exp, L, cf.gamma0 * cf.gamma3 + de.gamma0 * de.gamma3, {{FF, -1.0}});
  add_exp(bag.t_exp, L, cf.gamma0 * cf.gamma1, {{WF, cf.gamma2}, {FF, -1.0}});
  add_exp(bag.t_exp, L, de.gamma0 * de.gamma1, {{W, de.gamma2}, {FF, -1.0}});
  add_exp(bag.t_exp, L, u.b_in, {{WF, -1.0}, {D_, -1.0}});
  bag.t_const += sys.t_cloud;
  finish(B, u, eta, bag, FF, wr);
  return B;
}

double coord(const Built& B, Var v, const Eigen::VectorXd& x) {
  const int i = B.L.idx[v];
  if (i >= 0) return x[i];
  if (i == -1) return B.L.fixv[v];
  return TransformedPoint::kNaN;
}

Stage1Result make_result(const Built& B, const Eigen::VectorXd& x, Mode mode,
                         const UserProfile& u, const SystemConfig& sys) {
  Stage1Result r;
  r.point.lw = coord(B, W, x);
  r.point.lfu = coord(B, FU, x);
  r.point.lff = coord(B, FF, x);
  r.point.lp = coord(B, P_, x);
  r.point.lr = coord(B, R, x);
  r.point.lwf = coord(B, WF, x);
  r.point.ld = coord(B, D_, x);

  Decision dec;
  dec.mode = mode;
  dec.omega_u = std::exp(r.point.lw);
  dec.omega_f = std::isnan(r.point.lwf) ? dec.omega_u : std::exp(r.point.lwf);
  dec.f_u = std::exp(r.point.lfu);
  dec.f_f = std::isnan(r.point.lff) ? 0.0 : std::exp(r.point.lff);
  dec.p = std::exp(r.point.lp);
  dec.rho = std::exp(r.point.lr);
  dec.d = std::isnan(r.point.ld) ? 0.0 : std::exp(r.point.ld);

  r.value = mode == Mode::Cloud ? dec.d : dec.f_f;
  r.t1 = total_delay(dec, u, sys);
  r.energy = total_energy(dec, u, sys);
  r.xi1 = u.w_t * r.t1 + u.w_e * r.energy;
  const double rate = uplink_rate(dec.rho, dec.p, B.b0);
  r.t_user = device_cycles(dec, u) / dec.f_u + b_out_user(u, dec.omega_u) / rate;
  return r;
}

bool solvable(const UserProfile& u, const SystemConfig& sys, double eta) {
  return eta > 0.0 && offload_possible(u, sys) && !user_omega_range(u).empty;
}

}  // namespace

ConvexProblem build_p3_problem(const UserProfile& u, const SystemConfig& sys,
                               double eta) {
  return make_p3(u, sys, eta).prob;
}

ConvexProblem build_p4_problem(const UserProfile& u, const SystemConfig& sys,
                               double eta) {
  return make_p4(u, sys, eta).prob;
}

ConvexProblem build_p_dk_problem(const UserProfile& u, const SystemConfig& sys,
                                 double eta, double d) {
  return make_p_dk(u, sys, eta, d).prob;
}

std::optional<Stage1Result> solve_p3(const UserProfile& u, const SystemConfig& sys,
                                     double eta) {
  if (!solvable(u, sys, eta)) return std::nullopt;
  Built B = make_p3(u, sys, eta);
  const auto x = minimize_convex(B.prob);
  if (!x) return std::nullopt;
  return make_result(B, *x, Mode::Fog, u, sys);
}

std::optional<Stage1Result> solve_p4(const UserProfile& u, const SystemConfig& sys,
                                     double eta) {
  if (!solvable(u, sys, eta)) return std::nullopt;
  Built B = make_p4(u, sys, eta);
  const auto x = minimize_convex(B.prob);
  if (!x) return std::nullopt;
  return make_result(B, *x, Mode::Cloud, u, sys);
}

std::optional<double> solve_p_dk(const UserProfile& u, const SystemConfig& sys,
                                 double eta, double d) {
  if (!solvable(u, sys, eta) || !(d > 0.0)) return std::nullopt;
  Built B = make_p_dk(u, sys, eta, d);
  const auto x = minimize_convex(B.prob);
  if (!x) return std::nullopt;
  return std::exp((*x)[B.L.idx[FF]]);
}

}  // namespace cato
