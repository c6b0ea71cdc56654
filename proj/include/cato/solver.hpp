// Top-level min-max solver: bisection on the shared cost bound, threshold
// classification of users into local vs offloading sets, per-user minimum-
// resource subproblems, and an exact 0-1 knapsack deciding which offloaders
// bypass the fog and go to the cloud.
#ifndef CATO_SOLVER_HPP
#define CATO_SOLVER_HPP

#include <functional>
#include <optional>
#include <vector>

#include "cato/convex.hpp"
#include "cato/types.hpp"

namespace cato {

// Index sets of a user partition: set_a runs locally, set_b offloads.
struct Classification {
  std::vector<int> set_a;
  std::vector<int> set_b;
};

// Best weighted cost achievable with everything on the device:
//   min_{c/t_max <= f <= f_max}  w_e * alpha * f^2 * c + w_t * c / f.
// The unconstrained minimizer is cbrt(w_t / (2 w_e alpha)); the box clamp
// decides the rest. Returns +inf when c/t_max > f_max (deadline unmeetable).
double eta_local(const UserProfile& u);

// The device CPU rate achieving eta_local (the clamped stationary point).
// Meaningful only when eta_local is finite.
double eta_local_rate(const UserProfile& u);

// Threshold rule: users whose local optimum already meets `eta` run locally
// (ties inclusive, keeping set_a maximal); everyone else offloads.
Classification classify(const std::vector<UserProfile>& users, double eta);

// 0-1 selection: maximize the total value sent over the link subject to the
// weight capacity. Items in forced_in are always selected (their values are
// ignored); forced_out items never are (their weights are ignored).
struct KnapsackResult {
  std::vector<int> selected;     // chosen item indices, ascending
  double residual_value = 0.0;   // total value of the unselected items
  double selected_weight = 0.0;  // total weight of the selection
  double approx_error = 0.0;     // value-shortfall bound when the DP
                                 // fallback ran (0 for the exact search)
  bool feasible = true;          // false: forced_in alone exceeds capacity
};
// Exact branch-and-bound (fractional-relaxation bound) up to 24 free items;
// beyond that, dynamic programming over weights rounded up to a grid of
// capacity/1e5, which stays feasible and reports its optimality gap bound.
KnapsackResult knapsack01(const std::vector<double>& values,
                          const std::vector<double>& weights, double capacity,
                          const std::vector<int>& forced_in = {},
                          const std::vector<int>& forced_out = {});

// Maps a subproblem solution back to physical units.
Decision to_decision(const Stage1Result& r, Mode mode);

// Feasibility check for the offloading set at cost bound eta: solve each
// user's minimum-fog and minimum-backhaul subproblems, then pick the cloud
// subset by knapsack so the remaining fog demand fits the pool. nullopt =
// infeasible at this eta; when a single user blocks (neither subproblem
// solvable), *blocking_user receives their index, otherwise -1 (capacity).
// Aggregate capacity checks carry a 1e-6 relative tolerance.
struct FeasibilityB {
  std::vector<Decision> decisions;  // parallel to set_b
  double fog_total = 0.0;
  double backhaul_total = 0.0;
  double knapsack_error = 0.0;
};
std::optional<FeasibilityB> verify_feasibility_b(
    const std::vector<UserProfile>& users, const std::vector<int>& set_b,
    const SystemConfig& sys, double eta, int* blocking_user = nullptr);

// Full solve result. Invariants: fog_total and backhaul_total within the
// configured capacities (1e-6 relative), every user's weighted cost at most
// eta_star + epsilon, and k in set_a exactly when eta_local(k) <= eta_star.
struct Solution {
  double eta_star = 0.0;
  Classification classification;
  std::vector<Decision> decisions;  // one per user
  double fog_total = 0.0;
  double backhaul_total = 0.0;
  int iterations = 0;  // feasibility probes performed
};

// Bisection on the cost bound, keeping the upper end feasible and the lower
// end infeasible, until the interval is narrower than epsilon. The initial
// upper bound is the worst finite local optimum; when some user cannot run
// locally it doubles from there until feasible, and gives up (throwing
// InfeasibleInstance, naming a blocking user when one exists) after growing
// a millionfold.
Solution solve(const Instance& inst, double epsilon);

// The same bisection driver with a pluggable feasibility engine for the
// offloading set (used by the recompression-enabled solvers). The engine
// sees the candidate set, the probed bound, and an optional blocking-user
// out-parameter with verify_feasibility_b semantics.
using VerifyFn = std::function<std::optional<FeasibilityB>(
    const std::vector<int>& set_b, double eta, int* blocking_user)>;
Solution solve_with(const Instance& inst, double epsilon,
                    const VerifyFn& verify);

}  // namespace cato

#endif
