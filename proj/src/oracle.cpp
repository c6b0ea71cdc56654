#include "cato/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "cato/model.hpp"

namespace cato {

namespace {

std::vector<double> axis(double lo, double hi, int n, bool logscale) {
  if (!(hi > lo) || n <= 1) return {hi};
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    v[i] = logscale ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t;
  }
  v.front() = lo;
  v.back() = hi;
  return v;
}

bool offloadable(const UserProfile& u, const SystemConfig& sys) {
  return u.rho_max > 0.0 && u.p_max > 0.0 && u.b_in > 0.0 &&
         sys.m0 * u.beta_lin > 0.0 && !user_omega_range(u).empty;
}

// Transmit-side quantities that do not depend on the compression ratio.
struct TxPoint {
  double p = 0.0, rho = 0.0;
  double rate = 0.0;  // uplink bits/s
  double etx = 0.0;   // (p + p0) / spectral efficiency: J per uplinked bit
};

std::vector<TxPoint> tx_grid(const UserProfile& u, const SystemConfig& sys,
                             const GridSpec& spec) {
  std::vector<TxPoint> out;
  const double b0 = beta0(u, sys);
  const auto P_ax = axis(u.p_max / 100.0, u.p_max, spec.points_power, spec.log_power);
  const auto r_ax = axis(u.rho_max / 30.0, u.rho_max, spec.points_rho, spec.log_rho);
  out.reserve(P_ax.size() * r_ax.size());
  for (const double P : P_ax)
    for (const double rho : r_ax) {
      const double p = P / rho;
      const double spectral = std::log2(1.0 + p * b0);
      if (!(spectral > 0.0)) continue;
      out.push_back({p, rho, rho * spectral, (p + u.p_circuit) / spectral});
    }
  return out;
}

// One kept candidate of a user's offload envelope: cost A + B/helper for
// helper >= m, achieved at the stored own-variable grid point.
struct Entry {
  double A = 0.0, B = 0.0, m = 0.0;
  double omega = 1.0, f_u = 0.0, p = 0.0, rho = 0.0;
};

struct Cand {
  double A = 0.0, m = 0.0;
  double f_u = 0.0, p = 0.0, rho = 0.0;
};

// Per-user envelope for one offload mode: for every gridded ratio, the
// Pareto staircase over (base cost A, minimal helper m).
std::vector<Entry> offload_front(const UserProfile& u, const SystemConfig& sys,
                                 Mode mode, const GridSpec& spec) {
  std::vector<Entry> out;
  if (!offloadable(u, sys)) return out;
  const OmegaRange wr = user_omega_range(u);
  const auto omega_ax = axis(wr.lo, wr.hi, spec.points_omega, spec.log_omega);
  const auto f_ax = axis(u.f_max / 30.0, u.f_max, spec.points_f, spec.log_f);
  const auto tx = tx_grid(u, sys, spec);
  const double t_extra = mode == Mode::Cloud ? sys.t_cloud : 0.0;

  std::vector<Cand> cand;
  cand.reserve(f_ax.size() * tx.size());
  for (const double w : omega_ax) {
    const double c_dev = u.c_local + comp_eval(u.comp_user, w);
    const double bo = u.b_in / w;
    const double helper = mode == Mode::Fog
                              ? u.c_offloadable + comp_eval(u.decomp_user, w)
                              : bo;
    cand.clear();
    for (const double f : f_ax) {
      const double t_comp = c_dev / f;
      const double e_comp = u.alpha * f * f * c_dev;
      for (const TxPoint& t : tx) {
        const double t_user = t_comp + bo / t.rate;
        double m = 0.0;
        if (std::isfinite(u.t_max)) {
          const double avail = u.t_max - t_user - t_extra;
          if (!(avail > 0.0)) continue;
          m = helper / avail;
        }
        const double xi = e_comp + t.etx * bo;
        const double A = u.w_t * (t_user + t_extra) + u.w_e * xi;
        if (!std::isfinite(A)) continue;
        cand.push_back({A, m, f, t.p, t.rho});
      }
    }
    std::sort(cand.begin(), cand.end(), [](const Cand& a, const Cand& b) {
      if (a.A != b.A) return a.A < b.A;
      if (a.m != b.m) return a.m < b.m;
      if (a.f_u != b.f_u) return a.f_u < b.f_u;
      if (a.p != b.p) return a.p < b.p;
      return a.rho < b.rho;
    });
    double m_best = kInf;
    for (const Cand& c : cand)
      if (c.m < m_best) {
        m_best = c.m;
        out.push_back({c.A, u.w_t * helper, c.m, w, c.f_u, c.p, c.rho});
      }
  }
  return out;
}

double entry_need(const Entry& e, double level) {
  if (!(level > e.A)) return kInf;
  const double f = e.B > 0.0 ? e.B / (level - e.A) : 0.0;
  return std::max(e.m, f);
}

double user_need(const std::vector<Entry>& front, double level,
                 const Entry** best = nullptr) {
  double need = kInf;
  for (const Entry& e : front) {
    const double v = entry_need(e, level);
    if (v < need) {
      need = v;
      if (best) *best = &e;
    }
  }
  return need;
}

struct PoolSplit {
  bool ok = false;
  double level = -kInf;
  std::vector<std::pair<const Entry*, double>> alloc;  // entry, helper amount
};

// Smallest common cost level at which the pooled helper demands fit `cap`;
// the continuous limit of equal-split refinement.
PoolSplit waterfill(const std::vector<const std::vector<Entry>*>& fronts,
                    double cap) {
  PoolSplit r;
  if (fronts.empty()) {
    r.ok = true;
    return r;
  }
  double min_total = 0.0, seed = 0.0;
  for (const auto* fr : fronts) {
    if (fr->empty()) return r;
    double m_min = kInf, a_min = kInf;
    for (const Entry& e : *fr) {
      m_min = std::min(m_min, e.m);
      a_min = std::min(a_min, e.A);
    }
    min_total += m_min;
    seed = std::max(seed, a_min);
  }
  if (min_total > cap * (1.0 + 1e-12)) return r;
  auto total = [&](double level) {
    double s = 0.0;
    for (const auto* fr : fronts) {
      const double v = user_need(*fr, level);
      if (!std::isfinite(v)) return kInf;
      s += v;
    }
    return s;
  };
  double lo = seed;
  double hi = std::max(seed * (1.0 + 1e-6), 1e-12);
  int guard = 0;
  while (!(total(hi) <= cap) && guard++ < 300) hi *= 2.0;
  if (!(total(hi) <= cap)) return r;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total(mid) <= cap) hi = mid; else lo = mid;
  }
  r.ok = true;
  r.level = hi;
  for (const auto* fr : fronts) {
    const Entry* e = nullptr;
    const double v = user_need(*fr, hi, &e);
    r.alloc.emplace_back(e, v);
  }
  // Give users whose demand collapsed to zero (no deadline, time weight 0)
  // a sliver of the leftover budget so the assignment stays realizable.
  if (std::isfinite(cap)) {
    double used = 0.0;
    int zeros = 0;
    for (const auto& a : r.alloc) {
      used += a.second;
      if (a.second == 0.0) ++zeros;
    }
    if (zeros > 0 && cap > used) {
      const double bump = std::min(1e-6, (cap - used) / zeros);
      for (auto& a : r.alloc)
        if (a.second == 0.0) a.second = bump;
    }
  }
  return r;
}

ScanResult local_scan(const UserProfile& u, const SystemConfig& sys, int n) {
  double lo = u.f_max * 1e-9;
  if (std::isfinite(u.t_max)) lo = std::max(lo, u.c_total / u.t_max);
  if (!(lo <= u.f_max)) return {};
  Decision dec;
  dec.mode = Mode::Local;
  return scan_min_1d(
      [&](double f) {
        dec.f_u = f;
        return wedc(dec, u, sys);
      },
      lo, u.f_max, n);
}

}  // namespace

ScanResult scan_min_1d(const std::function<double(double)>& fn, double lo,
                       double hi, int n) {
  ScanResult r;
  if (!(hi >= lo)) return r;
  n = std::max(n, 2);
  std::vector<double> xs(static_cast<std::size_t>(n));
  int best = -1;
  double best_v = kInf;
  for (int i = 0; i < n; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    const double v = fn(xs[i]);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  if (best < 0) return r;
  r.arg = xs[best];
  r.value = best_v;
  double a = xs[std::max(0, best - 1)];
  double b = xs[std::min(n - 1, best + 1)];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0;
       it < 200 && b - a > 1e-13 * std::max(1.0, std::abs(a) + std::abs(b));
       ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = fn(d);
    }
  }
  const double mid = 0.5 * (a + b);
  const double fm = fn(mid);
  for (const auto& [x, v] :
       {std::pair{c, fc}, std::pair{d, fd}, std::pair{mid, fm}})
    if (v < r.value || (v == r.value && x < r.arg)) {
      r.value = v;
      r.arg = x;
    }
  return r;
}

double finite_diff_check(const std::function<double(const Eigen::VectorXd&)>& fn,
                         const Eigen::VectorXd& point,
                         const Eigen::VectorXd& analytic_grad) {
  double worst = 0.0;
  Eigen::VectorXd x = point;
  for (int i = 0; i < point.size(); ++i) {
    const double h = 1e-4 * std::max(1.0, std::abs(point[i]));
    auto diff = [&](double hh) {
      x[i] = point[i] + hh;
      const double fp = fn(x);
      x[i] = point[i] - hh;
      const double fm = fn(x);
      x[i] = point[i];
      return (fp - fm) / (2.0 * hh);
    };
    const double rich = (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
    const double err =
        std::abs(rich - analytic_grad[i]) / std::max(1.0, std::abs(analytic_grad[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

double grid_eta_local(const UserProfile& u, const SystemConfig& sys, int n) {
  return local_scan(u, sys, n).value;
}

std::optional<double> grid_min_helper(const UserProfile& u,
                                      const SystemConfig& sys, double eta,
                                      Mode mode, double d, const GridSpec& spec) {
  if (mode == Mode::Local)
    throw std::invalid_argument("grid_min_helper: pick an offload mode");
  if (!(eta > 0.0) || !offloadable(u, sys)) return std::nullopt;
  if (mode == Mode::CloudRecompressed && !(d > 0.0)) return std::nullopt;

  const OmegaRange wr = user_omega_range(u);
  const auto omega_ax = axis(wr.lo, wr.hi, spec.points_omega, spec.log_omega);
  const auto f_ax = axis(u.f_max / 30.0, u.f_max, spec.points_f, spec.log_f);
  const auto tx = tx_grid(u, sys, spec);
  const auto omega_f_ax =
      mode == Mode::CloudRecompressed
          ? axis(u.comp_fog.omega_min, u.comp_fog.omega_max, spec.points_omega,
                 spec.log_omega)
          : std::vector<double>{1.0};

  double best = kInf;
  for (const double w : omega_ax) {
    const double c_dev = u.c_local + comp_eval(u.comp_user, w);
    const double bo = u.b_in / w;
    const double c_de = comp_eval(u.decomp_user, w);
    for (const double wf : omega_f_ax) {
      double helper = 0.0, t_fixed = 0.0;
      switch (mode) {
        case Mode::Fog:
          helper = u.c_offloadable + c_de;
          break;
        case Mode::Cloud:
          helper = bo;
          t_fixed = sys.t_cloud;
          break;
        default:  // CloudRecompressed
          helper = comp_eval(u.comp_fog, wf) + c_de;
          t_fixed = sys.t_cloud + (u.b_in / wf) / d;
          break;
      }
      for (const double f : f_ax) {
        const double t_comp = c_dev / f;
        const double e_comp = u.alpha * f * f * c_dev;
        for (const TxPoint& t : tx) {
          const double t_user = t_comp + bo / t.rate;
          const double xi = e_comp + t.etx * bo;
          const double budget =
              u.w_t > 0.0 ? (eta - u.w_e * xi) / u.w_t
                          : (u.w_e * xi <= eta ? kInf : -kInf);
          const double avail = std::min(u.t_max, budget) - t_user - t_fixed;
          if (!(avail > 0.0)) continue;
          best = std::min(best, helper / avail);
        }
      }
      if (mode != Mode::CloudRecompressed) break;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

GridSolveResult grid_solve(const Instance& inst, const GridSpec& spec) {
  const int K = static_cast<int>(inst.users.size());
  if (K < 1 || K > 3)
    throw std::invalid_argument("grid_solve: instance must have 1..3 users");
  const SystemConfig& sys = inst.config;

  std::vector<ScanResult> local(K);
  std::array<std::vector<Entry>, 3> fog_front, cloud_front;
  for (int k = 0; k < K; ++k) {
    local[k] = local_scan(inst.users[k], sys, std::max(spec.points_f, 128));
    if (spec.enumerate_modes) {
      fog_front[k] = offload_front(inst.users[k], sys, Mode::Fog, spec);
      cloud_front[k] = offload_front(inst.users[k], sys, Mode::Cloud, spec);
    }
  }

  GridSolveResult out;
  const int n_modes = spec.enumerate_modes ? 3 : 1;
  int tuples = 1;
  for (int k = 0; k < K; ++k) tuples *= n_modes;

  std::array<int, 3> mode{};
  for (int code = 0; code < tuples; ++code) {
    int c = code;
    for (int k = 0; k < K; ++k) {
      mode[k] = c % n_modes;
      c /= n_modes;
    }
    double val = -kInf;
    bool bad = false;
    std::vector<const std::vector<Entry>*> fog_pool, cloud_pool;
    std::vector<int> fog_users, cloud_users;
    for (int k = 0; k < K && !bad; ++k) {
      switch (mode[k]) {
        case 0:
          if (!std::isfinite(local[k].value)) bad = true;
          val = std::max(val, local[k].value);
          break;
        case 1:
          if (fog_front[k].empty()) bad = true;
          fog_pool.push_back(&fog_front[k]);
          fog_users.push_back(k);
          break;
        default:
          if (cloud_front[k].empty()) bad = true;
          cloud_pool.push_back(&cloud_front[k]);
          cloud_users.push_back(k);
          break;
      }
    }
    if (bad) continue;
    const PoolSplit fs = waterfill(fog_pool, sys.f_fog_max);
    if (!fs.ok) continue;
    const PoolSplit cs = waterfill(cloud_pool, sys.d_max);
    if (!cs.ok) continue;
    val = std::max({val, fs.level, cs.level});
    if (val >= out.eta) continue;

    out.eta = val;
    out.decisions.assign(K, Decision{});
    for (int k = 0; k < K; ++k)
      if (mode[k] == 0) {
        out.decisions[k].mode = Mode::Local;
        out.decisions[k].f_u = local[k].arg;
      }
    for (std::size_t i = 0; i < fog_users.size(); ++i) {
      Decision& dc = out.decisions[fog_users[i]];
      const Entry& e = *fs.alloc[i].first;
      dc = {Mode::Fog, e.omega, e.omega, e.f_u, fs.alloc[i].second, e.p, e.rho, 0.0};
    }
    for (std::size_t i = 0; i < cloud_users.size(); ++i) {
      Decision& dc = out.decisions[cloud_users[i]];
      const Entry& e = *cs.alloc[i].first;
      dc = {Mode::Cloud, e.omega, e.omega, e.f_u, 0.0, e.p, e.rho, cs.alloc[i].second};
    }
  }
  return out;
}

}  // namespace cato
