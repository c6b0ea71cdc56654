// Domain types shared by every layer: compression-model curves, user and
// system parameters, per-user decisions and constraint reports.
#ifndef CATO_TYPES_HPP
#define CATO_TYPES_HPP

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cato {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Raised when an iterative solver fails to converge. Distinct from an
// infeasible verdict, which is reported through optional<> results.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// Raised by the top-level drivers when no cost bound makes the instance
// feasible; `user` names a blocking user when one can be identified.
class InfeasibleInstance : public std::runtime_error {
public:
  InfeasibleInstance(const std::string& what, int user_idx = -1)
      : std::runtime_error(what), user(user_idx) {}
  int user;
};

enum class ModelKind { Compress, Decompress, Quality };

// One fitted curve y(w) over a ratio box [omega_min, omega_max].
//   workload kinds: y = gamma0 * (gamma1 * w^gamma2 + gamma3)   [CPU cycles]
//   quality kind:   y = gamma3 - gamma1 * w^gamma2              [score]
struct CompressionModel {
  ModelKind kind = ModelKind::Compress;
  double gamma0 = 1.0;  // workload scale, cycles (ignored by quality kind)
  double gamma1 = 0.0;
  double gamma2 = 1.0;
  double gamma3 = 0.0;
  double omega_min = 1.0;
  double omega_max = 1.0;
};

struct UserProfile {
  double c_total = 0.0;        // cycles, task size
  double c_local = 0.0;        // cycles that must run on the device
  double c_offloadable = 0.0;  // cycles that may be offloaded
  double b_in = 0.0;           // bits, raw task payload
  double t_max = 0.0;          // s, completion deadline
  double f_max = 0.0;          // Hz, device CPU cap
  double p_max = 0.0;          // W, total uplink transmit power cap (rho*p)
  double p_circuit = 0.0;      // W/Hz, circuit power per unit bandwidth
  double alpha = 0.0;          // J*s^2/cycle^3, CPU energy coefficient
  double beta_lin = 0.0;       // linear channel gain
  double w_t = 0.0;            // delay weight
  double w_e = 0.0;            // energy weight (w_t + w_e = 1)
  double rho_max = 0.0;        // Hz, bandwidth cap
  CompressionModel comp_user;    // device-side compression workload
  CompressionModel decomp_user;  // fog-side decompression workload
  CompressionModel quality_user; // perceived-quality curve
  CompressionModel comp_fog;     // fog-side recompression workload
  std::optional<double> q_min;   // quality floor; empty = lossless/no floor
};

struct SystemConfig {
  double f_fog_max = 0.0;  // Hz, shared fog CPU pool
  double d_max = 0.0;      // bits/s, shared backhaul capacity
  double t_cloud = 0.0;    // s, fixed cloud round-trip + execution delay
  double m0 = 1.0;         // beamforming gain
  double sigma_bs = 1.0;   // W/Hz, noise density at the base station
  double w_bw = 0.0;       // price per Hz (optional bandwidth pricing route)
  double w_c = 0.0;        // price per cycle
};

// Where a task runs. CloudRecompressed = decompress + recompress at the fog,
// then forward the smaller payload to the cloud.
enum class Mode { Local, Fog, Cloud, CloudRecompressed };

const char* mode_name(Mode m);

struct Decision {
  Mode mode = Mode::Local;
  double omega_u = 1.0;  // device compression ratio (vs raw payload)
  double omega_f = 1.0;  // fog recompression ratio (vs raw payload)
  double f_u = 0.0;      // Hz, device CPU rate
  double f_f = 0.0;      // Hz, fog CPU rate granted to this user
  double p = 0.0;        // W/Hz, uplink transmit power density
  double rho = 0.0;      // Hz, uplink bandwidth
  double d = 0.0;        // bits/s, backhaul rate granted to this user
};

// Per-constraint outcome: `ok` uses a small relative tolerance, `slack` is
// the raw margin (>= 0 means satisfied; +inf means vacuous for this mode).
struct ConstraintReport {
  struct Entry {
    bool ok = true;
    double slack = kInf;
  };
  Entry c1;   // f_u <= f_max
  Entry c2;   // total fog CPU <= f_fog_max (aggregate)
  Entry c3;   // decision mode well-formed
  Entry c4;   // exactly one mode
  Entry c5;   // omega_u within the feasible ratio range
  Entry c6;   // rho * p <= p_max
  Entry c7;   // rho <= rho_max
  Entry c8;   // total backhaul <= d_max (aggregate)
  Entry c9;   // total delay <= t_max
  Entry c10;  // omega_f within the fog ratio range (recompression only)

  bool feasible() const {
    return c1.ok && c2.ok && c3.ok && c4.ok && c5.ok && c6.ok && c7.ok &&
           c8.ok && c9.ok && c10.ok;
  }
};

// A solvable scenario: K users sharing one fog node and one backhaul link.
struct Instance {
  std::uint64_t seed = 0;
  std::vector<UserProfile> users;
  SystemConfig config;
};

}  // namespace cato

#endif
