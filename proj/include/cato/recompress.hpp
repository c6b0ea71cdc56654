// Fog-side recompression: a third offloading route where the fog node
// re-compresses a user's already-uploaded stream before forwarding it to the
// cloud over the shared backhaul. Per user the route trades fog CPU for
// backhaul: spending more forwarding rate d shrinks the fog CPU rate needed
// to still meet the user's cost bound. This module provides the closed-form
// pieces of that trade-off curve and three feasibility engines built on it
// (piecewise-linear approximation, a one-dimensional price sweep, and an
// iterative primal-dual scheme), plus a top-level solver that runs the usual
// bound bisection against any of them.
#ifndef CATO_RECOMPRESS_HPP
#define CATO_RECOMPRESS_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cato/convex.hpp"
#include "cato/solver.hpp"
#include "cato/types.hpp"

namespace cato {

// Per-user constants of the recompression trade-off, all in SI units. With
// the user-side variables frozen at their stage-1 values, the fog CPU rate
// that exactly exhausts the user's remaining delay budget is
//
//   h0(w, d) = w * d * (g1t * w^g2 + g3t) / (nu0 * w * d - b_in)
//
// where w is the fog recompression ratio and d the forwarding rate.
//   nu0  seconds left for fog compute plus forwarding once the user-side
//        delay, the cloud stage, and the cost bound are accounted for
//   g1t  fog cycles: power-law coefficient of the recompression ratio
//   g2   fog cycles: power-law exponent (interior optimum exists iff > 0)
//   g3t  fog cycles: ratio-independent part, including decompression of the
//        user's upload
//   b_in raw (pre-compression) task size in bits; both the user's upload
//        ratio and the fog ratio are measured against it, so the forwarded
//        payload is b_in / w
struct Mode3Coefficients {
  double nu0 = 0.0;
  double g1t = 0.0;
  double g2 = 0.0;
  double g3t = 0.0;
  double b_in = 0.0;
  double omega_f_min = 1.0;
  double omega_f_max = 1.0;
};

// Fog CPU rate (Hz) that meets the delay budget at ratio omega_f and
// forwarding rate d. Returns +inf when the budget cannot be met at any rate,
// i.e. when nu0 * omega_f * d <= b_in (forwarding alone overruns the budget).
double h0(const Mode3Coefficients& c, double omega_f, double d);

// The forwarding rate at which omega_f becomes the stationary ratio of h0:
//
//   h1(w) = b_in * ((g2 + 1) * g1t * w^g2 + g3t) / (nu0 * g2 * g1t * w^(g2+1))
//
// Strictly decreasing in w for g2 > 0. Requires nu0 > 0 and g2 > 0.
double h1(const Mode3Coefficients& c, double omega_f);

// Inverse of h1 by bisection over [omega_f_min, omega_f_max] to 1e-10
// relative width; d outside the attainable range clips to the nearer bound.
double inv_h1(const Mode3Coefficients& c, double d);

// Ratio minimizing h0(., d) over the box, using the stationary structure:
// g2 <= 0 pushes the ratio to the upper bound; otherwise the unique interior
// stationary point inv_h1(d) applies when d lies between h1(omega_f_max) and
// h1(omega_f_min), and the nearer bound applies outside. Returns nullopt
// when d <= b_in / (nu0 * omega_f_max), where no ratio meets the budget.
std::optional<double> optimal_omega_f(const Mode3Coefficients& c, double d);

// Partial derivative of h0 with respect to d (fog CPU saved per extra unit
// of forwarding rate; always negative where finite):
//
//   dh0/dd = -b_in * w * (g1t * w^g2 + g3t) / (nu0 * w * d - b_in)^2
//
// Returns -inf on or past the budget boundary nu0 * w * d <= b_in.
double dh0_dd(const Mode3Coefficients& c, double omega_f, double d);

// The forwarding rate at which the marginal fog saving along the optimal-
// ratio curve equals the price lambda (Hz per bit/s):
//
//   dh0/dd(optimal_omega_f(d), d) + lambda = 0.
//
// The composed derivative increases from -inf (at the budget edge) toward 0,
// so the root is unique; rates beyond d_cap clip to d_cap (the saving only
// shrinks past the root). Returns nullopt when lambda exceeds the available
// saving over the whole usable range (the route is priced out) or when
// d_cap itself is inside the infeasible region. Requires lambda > 0.
std::optional<double> d_of_lambda(const Mode3Coefficients& c, double lambda,
                                  double d_cap);

// Builds the per-user constants from a stage-1 fog-offload solution at cost
// bound eta: nu0 is what remains of min{(eta - we*energy)/wt, T_max} after
// the user-side delay and the cloud stage, and the fog-cycle curve combines
// the fog recompression cost model with decompressing the user's upload at
// its stage-1 ratio. Returns nullopt when nu0 is not a positive finite
// number (the route cannot meet the bound at all).
std::optional<Mode3Coefficients> mode3_coeffs(const UserProfile& u,
                                              const SystemConfig& sys,
                                              double eta,
                                              const Stage1Result& stage1);

// Piecewise-linear over-approximation of the fog demand along the optimal-
// ratio curve F(d) = h0(optimal_omega_f(d), d). Because F is convex and
// decreasing, every chord lies on or above it, so selections driven by the
// table are conservative (never claim less fog than truly needed).
struct PlaTable {
  std::vector<double> breakpoints;  // forwarding rates, strictly increasing
  std::vector<double> f_values;     // F at the breakpoints, non-increasing
  std::vector<double> slopes;       // chord slopes, one per segment
  std::vector<double> intercepts;   // chord intercepts, one per segment

  // Chord value at d, clamping d into [front, back]. Exact at breakpoints.
  double value(double d) const;
  bool usable() const { return breakpoints.size() >= 2; }
};

// Samples F at d_l = (d_rq - 1) * l / segments for l = 0..segments (the
// 1 bit/s margin keeps the last point strictly below the direct-to-cloud
// rate d_rq), drops points where no ratio meets the budget, and keeps the
// chords of the survivors. A table with fewer than two surviving points is
// unusable and excludes the route for that user.
PlaTable build_pla_table(const Mode3Coefficients& c, double d_rq,
                         int segments);

// One candidate assignment for one offloading user, as seen by the shared
// capacity selection: the fog CPU and backhaul rate it consumes, plus the
// operating point needed to reconstruct the full decision afterwards.
struct ModeOption {
  Mode mode = Mode::Fog;
  double fog_cost = 0.0;       // Hz
  double backhaul_cost = 0.0;  // bits/s
  double omega_f = 1.0;        // recompression ratio (recompressed route)
  double d = 0.0;              // forwarding rate (recompressed route)
};

// Feasibility engines for the offloading set at cost bound eta. All three
// return, when the bound is achievable, the per-user decisions (parallel to
// set_b) together with the deployed fog and backhaul totals; nullopt means
// the bound is not achievable by that engine. Users for whom neither the
// fog nor the cloud subproblem is solvable make the bound unachievable
// outright (reported via blocking_user, index into the full user list).
//
// Engine-specific knobs:
//   solve_fv_pla  samples each user's trade-off curve into `segments`
//                 chords and solves the mode/segment selection exactly.
//   solve_fv_osts sweeps the backhaul price from zero in steps of
//                 delta_lambda (GHz per Mbit/s) up to the price where the
//                 route is dominated for everyone and the forwarding rates
//                 fit the backhaul outright, solving the three-way mode
//                 selection exactly at each step and stopping at the first
//                 feasible one. lambda_max_override >= 0 caps the sweep at
//                 that price instead (used to study sweep truncation).
//   solve_fv_iuts runs max_iters rounds of dual price updates (step 1/...
//                 sqrt(n)) and projected-gradient updates of relaxed mode
//                 shares, rounding to modes each round, repairing backhaul
//                 overuse greedily, and keeping the best feasible rounding.
//                 `converged` (optional) reports whether the iteration
//                 settled before the cap rather than timing out.
std::optional<FeasibilityB> solve_fv_pla(const std::vector<UserProfile>& users,
                                         const std::vector<int>& set_b,
                                         const SystemConfig& sys, double eta,
                                         int segments,
                                         int* blocking_user = nullptr);
std::optional<FeasibilityB> solve_fv_osts(
    const std::vector<UserProfile>& users, const std::vector<int>& set_b,
    const SystemConfig& sys, double eta, double delta_lambda,
    double lambda_max_override = -1.0, int* blocking_user = nullptr);
std::optional<FeasibilityB> solve_fv_iuts(
    const std::vector<UserProfile>& users, const std::vector<int>& set_b,
    const SystemConfig& sys, double eta, int max_iters,
    bool* converged = nullptr, int* blocking_user = nullptr);

// Projection onto the relaxed mode simplex {s >= 0, s_0+s_1+s_2 <= 1}:
// clip negatives, and when the sum still exceeds one, shift uniformly down
// re-clipping until the face constraint holds (water-filling).
std::array<double, 3> project_mode_simplex(const std::array<double, 3>& s);

// One dual price update: lambda <- max(0, lambda + step * (usage - cap)).
double iuts_lambda_step(double lambda, double step, double usage, double cap);

// Extended min-max solver: the solve() bisection with the recompressed
// route enabled, using the engine named by `algo` ("pla", "osts", or
// "iuts") with the knobs above (only the knob matching the engine is read).
Solution solve_ext(const Instance& inst, double epsilon,
                   const std::string& algo, int segments = 9,
                   double delta_lambda = 5e-3, int max_iters = 500);

}  // namespace cato

#endif  // CATO_RECOMPRESS_HPP
