#include "cato/model.hpp"

#include <algorithm>
#include <cmath>

namespace cato {

namespace {

constexpr double kRelTol = 1e-9;      // single-variable constraint tolerance
constexpr double kAggRelTol = 1e-6;   // shared-pool constraint tolerance

bool uses_backhaul(Mode m) {
  return m == Mode::Cloud || m == Mode::CloudRecompressed;
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Local: return "local";
    case Mode::Fog: return "fog";
    case Mode::Cloud: return "cloud";
    case Mode::CloudRecompressed: return "cloud-recomp";
  }
  return "?";
}

double beta0(const UserProfile& u, const SystemConfig& sys) {
  if (sys.sigma_bs <= 0.0)
    throw std::invalid_argument("beta0: sigma_bs must be positive");
  return sys.m0 * u.beta_lin / sys.sigma_bs;
}

double uplink_rate(double rho, double p, double beta0_val) {
  if (rho <= 0.0 || p <= 0.0) return 0.0;
  return rho * std::log2(1.0 + p * beta0_val);
}

double comp_eval(const CompressionModel& m, double omega) {
  const double lo = m.omega_min, hi = m.omega_max;
  const double tol = kRelTol * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  if (omega < lo - tol || omega > hi + tol)
    throw std::domain_error("comp_eval: omega outside the model range");
  omega = std::clamp(omega, lo, hi);
  const double pw = m.gamma1 * std::pow(omega, m.gamma2);
  if (m.kind == ModelKind::Quality) return m.gamma3 - pw;
  return m.gamma0 * (pw + m.gamma3);
}

OmegaRange feasible_omega_range(const CompressionModel& quality,
                                std::optional<double> q_min) {
  OmegaRange r{quality.omega_min, quality.omega_max, false};
  if (!q_min) return r;
  // Quality is non-increasing in omega (gamma1, gamma2 >= 0), so a floor
  // clips the upper end: q(w) >= q_min  <=>  w <= ((g3 - q_min)/g1)^(1/g2).
  const double q_lo = quality.gamma3 - quality.gamma1 * std::pow(r.lo, quality.gamma2);
  if (*q_min > q_lo + kRelTol) {
    r.empty = true;
    return r;
  }
  if (quality.gamma1 > 0.0 && quality.gamma2 > 0.0) {
    const double w_cap =
        std::pow((quality.gamma3 - *q_min) / quality.gamma1, 1.0 / quality.gamma2);
    r.hi = std::min(r.hi, std::max(r.lo, w_cap));
  }
  return r;
}

OmegaRange user_omega_range(const UserProfile& u) {
  OmegaRange wr = feasible_omega_range(u.quality_user, u.q_min);
  wr.lo = std::max(wr.lo, u.comp_user.omega_min);
  wr.hi = std::min(wr.hi, u.comp_user.omega_max);
  if (wr.lo > wr.hi) wr.empty = true;
  return wr;
}

double b_out_user(const UserProfile& u, double omega_u) {
  return u.b_in / omega_u;
}

double b_out_fog(const UserProfile& u, double omega_f) {
  return u.b_in / omega_f;
}

double device_cycles(const Decision& dec, const UserProfile& u) {
  if (dec.mode == Mode::Local) return u.c_total;
  return u.c_local + comp_eval(u.comp_user, dec.omega_u);
}

double fog_cycles(const Decision& dec, const UserProfile& u) {
  switch (dec.mode) {
    case Mode::Local:
    case Mode::Cloud:
      return 0.0;
    case Mode::Fog:
      return u.c_offloadable + comp_eval(u.decomp_user, dec.omega_u);
    case Mode::CloudRecompressed:
      return comp_eval(u.comp_fog, dec.omega_f) +
             comp_eval(u.decomp_user, dec.omega_u);
  }
  return 0.0;
}

double total_delay(const Decision& dec, const UserProfile& u,
                   const SystemConfig& sys) {
  if (dec.mode == Mode::Local) {
    if (dec.f_u <= 0.0) return kInf;
    return u.c_total / dec.f_u;
  }
  if (dec.f_u <= 0.0) return kInf;
  const double t1u = device_cycles(dec, u) / dec.f_u;
  const double r = uplink_rate(dec.rho, dec.p, beta0(u, sys));
  if (r <= 0.0) return kInf;
  const double t2u = b_out_user(u, dec.omega_u) / r;
  double t = t1u + t2u;
  switch (dec.mode) {
    case Mode::Fog:
      if (dec.f_f <= 0.0) return kInf;
      t += fog_cycles(dec, u) / dec.f_f;
      // Forwarding of the payload over the backhaul is optional in this
      // mode; it only happens when a backhaul share was actually granted.
      if (dec.d > 0.0) t += b_out_user(u, dec.omega_u) / dec.d;
      break;
    case Mode::Cloud:
      if (dec.d <= 0.0) return kInf;
      t += b_out_user(u, dec.omega_u) / dec.d + sys.t_cloud;
      break;
    case Mode::CloudRecompressed:
      if (dec.f_f <= 0.0 || dec.d <= 0.0) return kInf;
      t += fog_cycles(dec, u) / dec.f_f +
           b_out_fog(u, dec.omega_f) / dec.d + sys.t_cloud;
      break;
    default:
      break;
  }
  return t;
}

double total_energy(const Decision& dec, const UserProfile& u,
                    const SystemConfig& sys) {
  const double compute = u.alpha * dec.f_u * dec.f_u * device_cycles(dec, u);
  if (dec.mode == Mode::Local) return compute;
  const double spectral = std::log2(1.0 + dec.p * beta0(u, sys));
  if (dec.p <= 0.0 || spectral <= 0.0) return kInf;
  // rho * (p + p0) * t2u; the bandwidth cancels against the rate.
  const double tx = (dec.p + u.p_circuit) * u.b_in / (dec.omega_u * spectral);
  return compute + tx;
}

double wedc(const Decision& dec, const UserProfile& u, const SystemConfig& sys) {
  return u.w_t * total_delay(dec, u, sys) + u.w_e * total_energy(dec, u, sys);
}

ConstraintReport validate(const Decision& dec, const UserProfile& u,
                          const SystemConfig& sys, const PeerTotals& peers) {
  ConstraintReport rep;
  auto set = [](ConstraintReport::Entry& e, double slack, double scale,
                double rel_tol) {
    e.slack = slack;
    e.ok = slack >= -rel_tol * std::max(1.0, std::abs(scale));
  };

  set(rep.c1, u.f_max - dec.f_u, u.f_max, kRelTol);
  rep.c3 = {true, kInf};  // the Mode enum cannot encode an invalid vector
  rep.c4 = {true, kInf};  // ... nor more than one mode

  const bool own_fog =
      dec.mode == Mode::Fog || dec.mode == Mode::CloudRecompressed;
  const double fog_total = peers.fog_hz + (own_fog ? dec.f_f : 0.0);
  set(rep.c2, sys.f_fog_max - fog_total, sys.f_fog_max, kAggRelTol);

  const double bh_total =
      peers.backhaul_bps + (uses_backhaul(dec.mode) ? dec.d : 0.0);
  set(rep.c8, sys.d_max - bh_total, sys.d_max, kAggRelTol);

  if (dec.mode != Mode::Local) {
    const OmegaRange wr = user_omega_range(u);
    if (wr.empty) {
      rep.c5 = {false, -kInf};
    } else {
      const double slack = std::min(dec.omega_u - wr.lo, wr.hi - dec.omega_u);
      set(rep.c5, slack, wr.hi, kRelTol);
    }
    set(rep.c6, u.p_max - dec.rho * dec.p, u.p_max, kRelTol);
    set(rep.c7, u.rho_max - dec.rho, u.rho_max, kRelTol);
  }

  set(rep.c9, u.t_max - total_delay(dec, u, sys), u.t_max, kRelTol);

  if (dec.mode == Mode::CloudRecompressed) {
    const double slack = std::min(dec.omega_f - u.comp_fog.omega_min,
                                  u.comp_fog.omega_max - dec.omega_f);
    set(rep.c10, slack, u.comp_fog.omega_max, kRelTol);
  }
  return rep;
}

double rho_max_from_pricing(const UserProfile& u, const SystemConfig& sys,
                            double theta_max) {
  if (sys.w_bw <= 0.0)
    throw std::invalid_argument("rho_max_from_pricing: w_bw must be positive");
  return std::max(0.0, (theta_max - sys.w_c * u.c_offloadable) / sys.w_bw);
}

}  // namespace cato
