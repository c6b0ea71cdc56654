#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "cato/types.hpp"

namespace cato {

// Grid resolution for the brute-force reference optimizer. The axes are the
// per-user variables: compression ratio, device frequency, total transmit
// power (rho * p, so the power budget is hit exactly on-axis), and
// bandwidth. Shared helper resources (fog CPU, backhaul) are not gridded;
// they are split across users by water-filling over the gridded candidates.
// Intended resolution is >= 8 points per axis; one-point axes are permitted
// and collapse to the upper bound (useful for pinned-optimum tests).
struct GridSpec {
  int points_omega = 60;
  int points_f = 60;
  int points_power = 60;
  int points_rho = 60;
  bool log_omega = true;
  bool log_f = true;
  bool log_power = true;
  bool log_rho = true;
  bool enumerate_modes = true;  // false: every user is forced local
};

struct GridSolveResult {
  double eta = kInf;                // min-max weighted cost over the grid
  std::vector<Decision> decisions;  // realizable assignment achieving eta
};

// Brute-force upper-bound reference for the joint problem: enumerates all
// local/fog/cloud assignment tuples (K <= 3), grids each user's own
// variables, and splits the fog CPU and backhaul budgets by water-filling
// (bisection on the common cost level, the fixed point that equal-split
// refinement converges to). The result is always realizable, so it upper
// bounds the true optimum and is non-increasing under nested grid
// refinement.
GridSolveResult grid_solve(const Instance& inst, const GridSpec& spec = {});

// Minimum helper resource that lets user `u` meet cost bound `eta` using
// own-variable choices from the grid: fog Hz for Mode::Fog, backhaul bps
// for Mode::Cloud, and fog Hz at the fixed backhaul share `d` for
// Mode::CloudRecompressed (which grids the fog ratio as a fifth axis,
// reusing points_omega/log_omega). nullopt when no grid point qualifies.
std::optional<double> grid_min_helper(const UserProfile& u,
                                      const SystemConfig& sys, double eta,
                                      Mode mode, double d = 0.0,
                                      const GridSpec& spec = {});

// Best local-only cost via dense scan plus refinement; kInf if even the
// full device frequency cannot meet the deadline.
double grid_eta_local(const UserProfile& u, const SystemConfig& sys,
                      int n = 256);

struct ScanResult {
  double arg = 0.0;
  double value = kInf;
};

// Dense n-point scan over [lo, hi] followed by golden-section refinement
// around the best cell. fn may return +inf to mark infeasible points; ties
// resolve to the smallest argument.
ScanResult scan_min_1d(const std::function<double(double)>& fn, double lo,
                       double hi, int n);

// Maximum relative discrepancy between `analytic_grad` and a
// Richardson-extrapolated central difference of fn at `point`.
double finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& fn,
                         const Eigen::VectorXd& point,
                         const Eigen::VectorXd& analytic_grad);

}  // namespace cato
