// Closed-form system model: channel rate, compression workloads, per-user
// delay/energy/cost and constraint evaluation. Everything downstream computes
// costs only through these functions.
#ifndef CATO_MODEL_HPP
#define CATO_MODEL_HPP

#include "cato/types.hpp"

namespace cato {

// Effective SNR gain per unit transmit power density: m0 * beta / sigma_bs.
double beta0(const UserProfile& u, const SystemConfig& sys);

// Uplink rate r = rho * log2(1 + p * beta0), bits/s.
double uplink_rate(double rho, double p, double beta0_val);

// Evaluate a fitted curve at ratio omega. Workload kinds return cycles,
// quality kind returns the quality score. omega outside the model's box
// (beyond a tiny relative tolerance) is a domain error.
double comp_eval(const CompressionModel& m, double omega);

struct OmegaRange {
  double lo = 1.0;
  double hi = 1.0;
  bool empty = false;
};

// Ratio range delivering at least q_min quality: the model's box, with the
// upper end clipped by inverting the quality curve when a floor is set.
OmegaRange feasible_omega_range(const CompressionModel& quality,
                                std::optional<double> q_min);

// The user's effective compression-ratio range: quality clip intersected
// with the compression model's own box (what the ratio constraint enforces).
OmegaRange user_omega_range(const UserProfile& u);

// Offloaded payload sizes, bits.
double b_out_user(const UserProfile& u, double omega_u);  // b_in / omega_u
double b_out_fog(const UserProfile& u, double omega_f);   // b_in / omega_f

// Device-side cycles for a decision: c_local + c_offloadable when local,
// c_local + compression workload otherwise.
double device_cycles(const Decision& dec, const UserProfile& u);

// Fog-side cycles: decompression (+ offloaded task in Fog mode, or
// recompression in CloudRecompressed mode); 0 for Local/Cloud.
double fog_cycles(const Decision& dec, const UserProfile& u);

// End-to-end completion time, seconds. Divisors that the mode needs but that
// are zero (device rate, uplink rate, fog rate, backhaul) yield +inf.
double total_delay(const Decision& dec, const UserProfile& u,
                   const SystemConfig& sys);

// Device energy: alpha * f_u^2 * device_cycles + transmit energy when
// offloading. Zero uplink rate while offloading yields +inf.
double total_energy(const Decision& dec, const UserProfile& u,
                    const SystemConfig& sys);

// Weighted energy-and-delay cost: w_t * delay + w_e * energy.
double wedc(const Decision& dec, const UserProfile& u, const SystemConfig& sys);

// Aggregate resource use of the other users, for the two shared constraints.
struct PeerTotals {
  double fog_hz = 0.0;
  double backhaul_bps = 0.0;
};

// Evaluate every constraint with slack. The aggregate checks (fog pool,
// backhaul pool) add this decision's own use on top of `peers`.
ConstraintReport validate(const Decision& dec, const UserProfile& u,
                          const SystemConfig& sys, const PeerTotals& peers = {});

// Bandwidth cap from the pricing route: (theta_max - w_c * c_offloadable) /
// w_bw, clamped at 0 (<= 0 means offloading is priced out).
double rho_max_from_pricing(const UserProfile& u, const SystemConfig& sys,
                            double theta_max);

}  // namespace cato

#endif
