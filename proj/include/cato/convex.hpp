#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "cato/types.hpp"

namespace cato {

// The per-user subproblems are solved after the usual log substitution
// (x = ln of each physical quantity), which turns every cost term into one
// of two convex families below. A SmoothFn is a sum of such terms.

// coef * exp(a . x)  (a posynomial monomial in the original variables).
using TermVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;

struct ExpTerm {
  double coef = 0.0;
  TermVec a;
};

// a0 * exp(a1 * x[p] + y . x) / ln(1 + beta0 * exp(x[p])): the rate
// denominator family covering uplink time and transmit energy.
struct RateTerm {
  double a0 = 0.0;
  double a1 = 0.0;
  TermVec y;
  int p_index = 0;
  double beta0 = 1.0;
};

struct SmoothFn {
  double constant = 0.0;
  Eigen::VectorXd lin;    // optional linear part (size 0 = absent)
  Eigen::MatrixXd quad;   // optional 0.5 * x'Qx part (size 0 = absent)
  std::vector<ExpTerm> exp_terms;
  std::vector<RateTerm> rate_terms;

  double eval(const Eigen::VectorXd& x) const;
  // Evaluates and accumulates derivatives into grad/hess (either may be
  // null); the caller zero-initializes them.
  double eval_derivs(const Eigen::VectorXd& x, Eigen::VectorXd* grad,
                     Eigen::MatrixXd* hess) const;
};

struct SmoothIneq {
  SmoothFn fn;
  double rhs = 0.0;  // fn(x) <= rhs
};

struct LinearIneq {
  Eigen::VectorXd a;
  double b = 0.0;  // a . x <= b
};

// min cost.x + objective(x)  s.t.  smooth fn_i(x) <= rhs_i, linear rows,
// and the box lb <= x <= ub. `objective` defaults to the zero function; the
// subproblem builders only ever need the linear cost.
struct ConvexProblem {
  int n = 0;
  Eigen::VectorXd cost;
  SmoothFn objective;
  Eigen::VectorXd lb, ub;
  Eigen::VectorXd x_init;  // optional strictly-interior seed (size 0 = center)
  std::vector<SmoothIneq> ineqs;
  std::vector<LinearIneq> lin;
};

struct BarrierOptions {
  double gap_tol = 1e-8;       // relative duality-style gap m/t
  double feas_margin = 1e-9;   // phase-I slack needed to declare feasibility
  int max_outer = 200;
  int max_newton = 100;
};

// Two-phase primal log-barrier method with damped Newton steps. Returns the
// minimizer, nullopt when phase I proves the constraints inconsistent, and
// throws SolverError when the iteration caps are hit without convergence.
std::optional<Eigen::VectorXd> minimize_convex(const ConvexProblem& prob,
                                               const BarrierOptions& opts = {});

// Finite-difference curvature audit of every smooth constraint at random
// interior points. worst_ratio is min over samples of
// min_eigenvalue / (1 + ||H||); a convex problem keeps it >= -1e-6.
struct ConvexityReport {
  double worst_ratio = 0.0;
  int points_checked = 0;
};
ConvexityReport check_convexity(const ConvexProblem& prob, int n_points,
                                std::uint64_t seed = 1);

// Log-domain coordinates of a subproblem solution. Fields that a particular
// subproblem does not use stay NaN.
struct TransformedPoint {
  double lw = kNaN;   // ln omega_u
  double lfu = kNaN;  // ln f_u
  double lff = kNaN;  // ln f_f
  double lp = kNaN;   // ln p
  double lr = kNaN;   // ln rho
  double lwf = kNaN;  // ln omega_f
  double ld = kNaN;   // ln d

  static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
};

// Minimum-resource solution for one offloading user at cost bound eta.
struct Stage1Result {
  double value = 0.0;  // f_f_rq [Hz] (fog mode) or d_rq [bits/s] (cloud mode)
  TransformedPoint point;
  double xi1 = 0.0;     // weighted cost at the point
  double t1 = 0.0;      // end-to-end delay at the point
  double t_user = 0.0;  // device compute + uplink time only
  double energy = 0.0;  // energy component at the point
};

// Minimum fog CPU share for serving the user at the fog (mode "fog") under
// cost bound eta. nullopt = no feasible operating point at this eta.
std::optional<Stage1Result> solve_p3(const UserProfile& u, const SystemConfig& sys,
                                     double eta);

// Minimum backhaul share for serving the user at the cloud with device-side
// compression only. nullopt = infeasible at this eta.
std::optional<Stage1Result> solve_p4(const UserProfile& u, const SystemConfig& sys,
                                     double eta);

// Minimum fog CPU share for the recompress-at-fog mode at a fixed backhaul
// share d. nullopt = infeasible at this (eta, d).
std::optional<double> solve_p_dk(const UserProfile& u, const SystemConfig& sys,
                                 double eta, double d);

// Problem builders behind the three solvers, exposed for curvature audits
// and derivative tests. ineqs[0] is the cost bound (when finite), the next
// entry the delay bound (when finite).
ConvexProblem build_p3_problem(const UserProfile& u, const SystemConfig& sys,
                               double eta);
ConvexProblem build_p4_problem(const UserProfile& u, const SystemConfig& sys,
                               double eta);
ConvexProblem build_p_dk_problem(const UserProfile& u, const SystemConfig& sys,
                                 double eta, double d);

// Box bounds used for the open-ended resource variables, in physical units.
constexpr double kResourceFloor = 1e-6;
constexpr double kResourceCeil = 1e15;

}  // namespace cato
