#include "cato/recompress.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <stdexcept>

#include "cato/model.hpp"

namespace cato {

namespace {

constexpr double kCapacityRelTol = 1e-6;  // aggregate (pool) feasibility slack
constexpr double kEpsD = 1.0;             // bits/s margin below the cloud rate
constexpr double kEdgeLift = 1e-9;        // relative lift off the budget edge

// Normalization used by the price-based engines: prices are quoted in GHz of
// fog CPU per Mbit/s of backhaul, so one normalized unit is 1e3 SI units.
constexpr double kGHz = 1e9;
constexpr double kMbps = 1e6;
constexpr double kLambdaSi = kGHz / kMbps;

double dbar1(const Mode3Coefficients& c) {
  return c.b_in / (c.nu0 * c.omega_f_max);
}

}  // namespace

double h0(const Mode3Coefficients& c, double omega_f, double d) {
  const double denom = c.nu0 * omega_f * d - c.b_in;
  if (!(denom > 0.0)) return kInf;
  return omega_f * d * (c.g1t * std::pow(omega_f, c.g2) + c.g3t) / denom;
}

double h1(const Mode3Coefficients& c, double omega_f) {
  if (!(c.nu0 > 0.0) || !(c.g2 > 0.0))
    throw std::invalid_argument("h1: needs nu0 > 0 and g2 > 0");
  const double num =
      c.b_in * ((c.g2 + 1.0) * c.g1t * std::pow(omega_f, c.g2) + c.g3t);
  const double den = c.nu0 * c.g2 * c.g1t * std::pow(omega_f, c.g2 + 1.0);
  return num / den;
}

double inv_h1(const Mode3Coefficients& c, double d) {
  // h1 decreases in the ratio, so small d means a large stationary ratio.
  if (d <= h1(c, c.omega_f_max)) return c.omega_f_max;
  if (d >= h1(c, c.omega_f_min)) return c.omega_f_min;
  double lo = c.omega_f_min, hi = c.omega_f_max;
  while (hi - lo > 1e-10 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (h1(c, mid) > d)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<double> optimal_omega_f(const Mode3Coefficients& c, double d) {
  if (!(d > dbar1(c))) return std::nullopt;
  // Without a growing power-law term the demand only falls as the ratio
  // grows, so the upper bound wins outright.
  if (c.g2 <= 0.0 || c.g1t <= 0.0) return c.omega_f_max;
  if (d <= h1(c, c.omega_f_max)) return c.omega_f_max;
  if (d >= h1(c, c.omega_f_min)) return c.omega_f_min;
  return inv_h1(c, d);
}

double dh0_dd(const Mode3Coefficients& c, double omega_f, double d) {
  const double denom = c.nu0 * omega_f * d - c.b_in;
  if (!(denom > 0.0)) return -kInf;
  return -c.b_in * omega_f * (c.g1t * std::pow(omega_f, c.g2) + c.g3t) /
         (denom * denom);
}

namespace {

// Marginal fog demand along the optimal-ratio curve (increasing in d).
double curve_slope(const Mode3Coefficients& c, double d) {
  const auto w = optimal_omega_f(c, d);
  if (!w) return -kInf;
  return dh0_dd(c, *w, d);
}

}  // namespace

std::optional<double> d_of_lambda(const Mode3Coefficients& c, double lambda,
                                  double d_cap) {
  if (!(lambda > 0.0))
    throw std::invalid_argument("d_of_lambda: lambda must be > 0");
  const double lo_edge = dbar1(c) * (1.0 + kEdgeLift);
  if (!(d_cap > lo_edge)) return std::nullopt;
  if (curve_slope(c, lo_edge) + lambda > 0.0) return std::nullopt;
  if (curve_slope(c, d_cap) + lambda <= 0.0) return d_cap;
  double lo = lo_edge, hi = d_cap;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (curve_slope(c, mid) + lambda <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<Mode3Coefficients> mode3_coeffs(const UserProfile& u,
                                              const SystemConfig& sys,
                                              double eta,
                                              const Stage1Result& stage1) {
  // Delay budget left once the cost bound and the hard deadline are both
  // honored with the user-side energy/delay frozen at the stage-1 point.
  double from_cost;
  if (u.w_t > 0.0)
    from_cost = (eta - u.w_e * stage1.energy) / u.w_t;
  else
    from_cost = u.w_e * stage1.energy <= eta ? kInf : -kInf;
  const double nu0 =
      std::min(from_cost, u.t_max) - stage1.t_user - sys.t_cloud;
  if (!(nu0 > 0.0) || !std::isfinite(nu0)) return std::nullopt;

  Mode3Coefficients c;
  c.nu0 = nu0;
  c.g1t = u.comp_fog.gamma0 * u.comp_fog.gamma1;
  c.g2 = u.comp_fog.gamma2;
  c.g3t = u.comp_fog.gamma0 * u.comp_fog.gamma3 +
          comp_eval(u.decomp_user, std::exp(stage1.point.lw));
  c.b_in = u.b_in;
  c.omega_f_min = u.comp_fog.omega_min;
  c.omega_f_max = u.comp_fog.omega_max;
  return c;
}

double PlaTable::value(double d) const {
  const double x =
      std::min(breakpoints.back(), std::max(d, breakpoints.front()));
  // Segment index: last breakpoint at or before x.
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  std::size_t seg = static_cast<std::size_t>(it - breakpoints.begin());
  seg = std::min(std::max<std::size_t>(seg, 1) - 1, slopes.size() - 1);
  return slopes[seg] * x + intercepts[seg];
}

PlaTable build_pla_table(const Mode3Coefficients& c, double d_rq,
                         int segments) {
  if (segments < 1)
    throw std::invalid_argument("build_pla_table: segments must be >= 1");
  PlaTable t;
  const double span = d_rq - kEpsD;
  if (!(span > 0.0)) return t;
  for (int l = 0; l <= segments; ++l) {
    const double d = span * static_cast<double>(l) / segments;
    const auto w = optimal_omega_f(c, d);
    if (!w) continue;  // no ratio meets the budget at this rate: drop point
    const double f = h0(c, *w, d);
    if (!std::isfinite(f)) continue;
    t.breakpoints.push_back(d);
    t.f_values.push_back(f);
  }
  if (t.breakpoints.size() < 2) return t;
  for (std::size_t l = 0; l + 1 < t.breakpoints.size(); ++l) {
    const double a = (t.f_values[l + 1] - t.f_values[l]) /
                     (t.breakpoints[l + 1] - t.breakpoints[l]);
    t.slopes.push_back(a);
    t.intercepts.push_back(t.f_values[l] - a * t.breakpoints[l]);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exact mode/segment selection: each offloading user picks one option, where
// an option is either a fixed (fog, backhaul) point or a chord along which
// backhaul may be spent continuously to save fog, and the total backhaul
// must fit the shared capacity while the total fog is minimized.

namespace {

struct SegOption {
  double f0 = 0.0;     // fog demand at the low end d0
  double d0 = 0.0;     // backhaul at the low end
  double slope = 0.0;  // fog saved per extra bit/s (<= 0); 0 for points
  double d1 = 0.0;     // high end of the chord (== d0 for points)
  Mode mode = Mode::Fog;
  int orig = -1;       // caller's option index (survives internal sorting)
};

struct PickResult {
  std::vector<int> choice;   // caller's option index per user
  std::vector<double> d;     // granted backhaul per user
  std::vector<double> fog;   // fog demand per user under the option model
  double fog_total = 0.0;
  double backhaul_total = 0.0;
};

struct HullSeg {
  int user = 0;
  double slope = 0.0;
  double len = 0.0;
};

struct PickUser {
  std::vector<SegOption> opts;     // sorted by best achievable fog
  std::vector<double> hd, hf;      // lower convex hull of option endpoints
};

double opt_best_fog(const SegOption& o) {
  return o.f0 + o.slope * (o.d1 - o.d0);
}

// Lower convex hull (in the backhaul/fog plane) of every endpoint of the
// user's options. Chord interiors lie on segments between their endpoints,
// so the hull of endpoints already contains every reachable point, and the
// relaxation "pick any hull point" lower-bounds the user's true choice.
void build_hull(PickUser& pu) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& o : pu.opts) {
    pts.emplace_back(o.d0, o.f0);
    if (o.d1 > o.d0) pts.emplace_back(o.d1, opt_best_fog(o));
  }
  std::sort(pts.begin(), pts.end());
  // Pareto filter: strictly cheaper fog as backhaul grows.
  std::vector<std::pair<double, double>> par;
  for (const auto& p : pts) {
    if (!par.empty() && p.first == par.back().first) continue;
    if (par.empty() || p.second < par.back().second) par.push_back(p);
  }
  // Monotone-chain lower hull: slopes must increase left to right.
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : par) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      const double s_ab = (b.second - a.second) / (b.first - a.first);
      const double s_bp = (p.second - b.second) / (p.first - b.first);
      if (s_ab >= s_bp)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  for (const auto& p : hull) {
    pu.hd.push_back(p.first);
    pu.hf.push_back(p.second);
  }
}

constexpr long kNodeCap = 50'000'000;

struct Selector {
  const std::vector<PickUser>& users;
  double cap;
  int n;
  std::vector<double> suffix_d;    // sum of hull-front backhaul from user k on
  std::vector<double> suffix_f;    // sum of hull-front fog from user k on
  std::vector<HullSeg> hull_segs;  // all hull chords, steepest saving first

  std::vector<int> choice;
  std::vector<HullSeg> extra;  // slidable chords already chosen (user-tagged)
  double d_base = 0.0, fog_base = 0.0;
  double best = kInf;
  PickResult out;
  long nodes = 0;

  explicit Selector(const std::vector<PickUser>& us, double capacity)
      : users(us), cap(capacity), n(static_cast<int>(us.size())) {
    suffix_d.assign(n + 1, 0.0);
    suffix_f.assign(n + 1, 0.0);
    for (int k = n - 1; k >= 0; --k) {
      suffix_d[k] = suffix_d[k + 1] + users[k].hd.front();
      suffix_f[k] = suffix_f[k + 1] + users[k].hf.front();
    }
    for (int k = 0; k < n; ++k)
      for (std::size_t i = 0; i + 1 < users[k].hd.size(); ++i) {
        HullSeg s;
        s.user = k;
        s.len = users[k].hd[i + 1] - users[k].hd[i];
        s.slope = (users[k].hf[i + 1] - users[k].hf[i]) / s.len;
        hull_segs.push_back(s);
      }
    std::sort(hull_segs.begin(), hull_segs.end(),
              [](const HullSeg& a, const HullSeg& b) {
                return a.slope < b.slope;
              });
    choice.assign(n, -1);
  }

  // Best conceivable total with users before `idx` fixed (sliding only along
  // their chosen chords) and users from `idx` on relaxed to their hulls.
  double bound(int idx) {
    const double need = d_base + suffix_d[idx];
    double budget = cap - need;
    if (budget < 0.0) return kInf;
    double fog = fog_base + suffix_f[idx];
    std::vector<HullSeg> own = extra;
    std::sort(own.begin(), own.end(), [](const HullSeg& a, const HullSeg& b) {
      return a.slope < b.slope;
    });
    std::size_t i = 0, j = 0;
    while (budget > 0.0 && (i < own.size() || j < hull_segs.size())) {
      // Advance past chords of users already assigned; their slides live in
      // `own` instead.
      while (j < hull_segs.size() && hull_segs[j].user < idx) ++j;
      const bool take_own =
          i < own.size() &&
          (j >= hull_segs.size() || own[i].slope <= hull_segs[j].slope);
      const HullSeg* s;
      if (take_own)
        s = &own[i++];
      else if (j < hull_segs.size())
        s = &hull_segs[j++];
      else
        break;
      const double t = std::min(s->len, budget);
      fog += s->slope * t;
      budget -= t;
    }
    return fog;
  }

  void leaf() {
    double budget = cap - d_base;
    if (budget < 0.0) return;
    std::vector<HullSeg> own = extra;
    std::sort(own.begin(), own.end(), [](const HullSeg& a, const HullSeg& b) {
      return a.slope < b.slope;
    });
    double fog = fog_base;
    std::vector<double> slide(n, 0.0);
    for (const auto& s : own) {
      if (budget <= 0.0) break;
      const double t = std::min(s.len, budget);
      fog += s.slope * t;
      slide[s.user] += t;
      budget -= t;
    }
    if (fog >= best) return;
    best = fog;
    out.choice.assign(n, -1);
    out.d.assign(n, 0.0);
    out.fog.assign(n, 0.0);
    out.fog_total = 0.0;
    out.backhaul_total = 0.0;
    for (int k = 0; k < n; ++k) {
      const SegOption& o = users[k].opts[choice[k]];
      out.choice[k] = o.orig;
      out.d[k] = o.d0 + slide[k];
      out.fog[k] = o.f0 + o.slope * slide[k];
      out.fog_total += out.fog[k];
      out.backhaul_total += out.d[k];
    }
  }

  void dfs(int idx) {
    if (++nodes > kNodeCap)
      throw SolverError("mode selection: branch-and-bound node budget exceeded");
    if (idx == n) {
      leaf();
      return;
    }
    if (bound(idx) >= best) return;
    for (std::size_t oi = 0; oi < users[idx].opts.size(); ++oi) {
      const SegOption& o = users[idx].opts[oi];
      if (d_base + o.d0 > cap) continue;
      choice[idx] = static_cast<int>(oi);
      d_base += o.d0;
      fog_base += o.f0;
      const bool slid = o.slope < 0.0 && o.d1 > o.d0;
      if (slid) extra.push_back({idx, o.slope, o.d1 - o.d0});
      dfs(idx + 1);
      if (slid) extra.pop_back();
      d_base -= o.d0;
      fog_base -= o.f0;
      choice[idx] = -1;
    }
  }
};

// Dynamic program on discretized backhaul for wide instances: options are
// restricted to chord endpoints (conservative), then a greedy slide spends
// whatever capacity the rounding left over.
std::optional<PickResult> pick_dp(const std::vector<PickUser>& users,
                                  double cap) {
  const int n = static_cast<int>(users.size());
  constexpr int kUnits = 100000;
  const double grain = cap / kUnits;
  struct Cand {
    int w = 0;
    double fog = 0.0, d = 0.0;
    int opt = 0;
    bool high_end = false;
  };
  std::vector<std::vector<Cand>> cands(n);
  for (int k = 0; k < n; ++k) {
    for (std::size_t oi = 0; oi < users[k].opts.size(); ++oi) {
      const SegOption& o = users[k].opts[oi];
      auto add = [&](double d, double fog, bool high) {
        const int w = static_cast<int>(std::ceil(d / grain - 1e-12));
        if (w <= kUnits)
          cands[k].push_back({w, fog, d, static_cast<int>(oi), high});
      };
      add(o.d0, o.f0, false);
      if (o.d1 > o.d0) add(o.d1, opt_best_fog(o), true);
    }
    if (cands[k].empty()) return std::nullopt;
  }
  const int cols = kUnits + 1;
  std::vector<double> dp(static_cast<std::size_t>(n + 1) * cols, kInf);
  std::vector<std::int16_t> take(static_cast<std::size_t>(n) * cols, -1);
  for (int j = 0; j < cols; ++j) dp[j] = 0.0;
  for (int k = 0; k < n; ++k) {
    double* prev = dp.data() + static_cast<std::size_t>(k) * cols;
    double* next = dp.data() + static_cast<std::size_t>(k + 1) * cols;
    std::int16_t* tk = take.data() + static_cast<std::size_t>(k) * cols;
    for (int j = 0; j < cols; ++j) {
      double bestv = kInf;
      std::int16_t besti = -1;
      for (std::size_t ci = 0; ci < cands[k].size(); ++ci) {
        const Cand& cd = cands[k][ci];
        if (cd.w > j) continue;
        const double v = prev[j - cd.w] + cd.fog;
        if (v < bestv) {
          bestv = v;
          besti = static_cast<std::int16_t>(ci);
        }
      }
      next[j] = bestv;
      tk[j] = besti;
    }
  }
  if (!std::isfinite(dp[static_cast<std::size_t>(n) * cols + kUnits]))
    return std::nullopt;
  PickResult r;
  r.choice.assign(n, -1);
  r.d.assign(n, 0.0);
  r.fog.assign(n, 0.0);
  int j = kUnits;
  for (int k = n - 1; k >= 0; --k) {
    const std::int16_t ci = take[static_cast<std::size_t>(k) * cols + j];
    const Cand& cd = cands[k][ci];
    r.choice[k] = cd.opt;
    r.d[k] = cd.d;
    r.fog[k] = cd.fog;
    j -= cd.w;
  }
  // Spend the leftover capacity sliding down the chosen chords.
  double used = 0.0;
  for (int k = 0; k < n; ++k) used += r.d[k];
  double budget = cap - used;
  std::vector<HullSeg> segs;
  for (int k = 0; k < n; ++k) {
    const SegOption& o = users[k].opts[r.choice[k]];
    if (o.slope < 0.0 && r.d[k] < o.d1)
      segs.push_back({k, o.slope, o.d1 - r.d[k]});
  }
  std::sort(segs.begin(), segs.end(), [](const HullSeg& a, const HullSeg& b) {
    return a.slope < b.slope;
  });
  for (const auto& s : segs) {
    if (budget <= 0.0) break;
    const double t = std::min(s.len, budget);
    r.d[s.user] += t;
    r.fog[s.user] += s.slope * t;
    budget -= t;
  }
  r.fog_total = 0.0;
  r.backhaul_total = 0.0;
  for (int k = 0; k < n; ++k) {
    r.fog_total += r.fog[k];
    r.backhaul_total += r.d[k];
    r.choice[k] = users[k].opts[r.choice[k]].orig;
  }
  return r;
}

std::optional<PickResult> pick_min_fog(std::vector<PickUser> users,
                                       double cap) {
  for (auto& pu : users) {
    if (pu.opts.empty()) return std::nullopt;
    for (std::size_t oi = 0; oi < pu.opts.size(); ++oi)
      pu.opts[oi].orig = static_cast<int>(oi);
    std::sort(pu.opts.begin(), pu.opts.end(),
              [](const SegOption& a, const SegOption& b) {
                return opt_best_fog(a) < opt_best_fog(b);
              });
    build_hull(pu);
  }
  if (users.size() <= 24) {
    Selector sel(users, cap);
    sel.dfs(0);
    if (!std::isfinite(sel.best)) return std::nullopt;
    return sel.out;
  }
  return pick_dp(users, cap);
}

// ---------------------------------------------------------------------------
// Per-user stage-1 data shared by the three engines.

struct ExtUser {
  const UserProfile* u = nullptr;
  std::optional<Stage1Result> fog;     // minimum fog CPU route
  std::optional<Stage1Result> cloud;   // minimum backhaul route
  std::optional<Mode3Coefficients> m3; // recompressed route constants
  std::optional<Stage1Result> anchor;  // user-side point behind m3
};

std::optional<std::vector<ExtUser>> build_ext_users(
    const std::vector<UserProfile>& users, const std::vector<int>& set_b,
    const SystemConfig& sys, double eta, int* blocking_user) {
  if (blocking_user) *blocking_user = -1;
  const int nb = static_cast<int>(set_b.size());
  using PairOpt =
      std::pair<std::optional<Stage1Result>, std::optional<Stage1Result>>;
  std::vector<std::future<PairOpt>> futs;
  futs.reserve(nb);
  for (int i = 0; i < nb; ++i) {
    const UserProfile& u = users.at(set_b[i]);
    futs.push_back(std::async(std::launch::async, [&u, &sys, eta] {
      return std::make_pair(solve_p3(u, sys, eta), solve_p4(u, sys, eta));
    }));
  }
  std::vector<ExtUser> ext(nb);
  bool blocked = false;
  for (int i = 0; i < nb; ++i) {
    auto pr = futs[i].get();
    ext[i].u = &users.at(set_b[i]);
    ext[i].fog = std::move(pr.first);
    ext[i].cloud = std::move(pr.second);
    if (!ext[i].fog && !ext[i].cloud) {
      if (!blocked && blocking_user) *blocking_user = set_b[i];
      blocked = true;
    }
  }
  if (blocked) return std::nullopt;
  for (auto& e : ext) {
    // The route needs a forwarding target rate, so the cloud subproblem must
    // be solvable too; user-side variables come from the fog stage when it
    // exists, otherwise from the cloud stage.
    if (!e.cloud) continue;
    e.anchor = e.fog ? *e.fog : *e.cloud;
    e.m3 = mode3_coeffs(*e.u, sys, eta, *e.anchor);
  }
  return ext;
}

Decision ext_decision(const ExtUser& e, Mode mode, double d, double fog_hz,
                      double omega_f) {
  switch (mode) {
    case Mode::Fog:
      return to_decision(*e.fog, Mode::Fog);
    case Mode::Cloud:
      return to_decision(*e.cloud, Mode::Cloud);
    default: {
      Decision dec = to_decision(*e.anchor, Mode::CloudRecompressed);
      dec.omega_f = omega_f;
      dec.f_f = fog_hz;
      dec.d = d;
      return dec;
    }
  }
}

std::optional<FeasibilityB> assemble(const std::vector<ExtUser>& ext,
                                     const std::vector<Mode>& modes,
                                     const std::vector<double>& d) {
  FeasibilityB fb;
  fb.decisions.resize(ext.size());
  for (std::size_t i = 0; i < ext.size(); ++i) {
    double fog_hz = 0.0, omega = 1.0;
    if (modes[i] == Mode::Fog) {
      fog_hz = ext[i].fog->value;
    } else if (modes[i] == Mode::CloudRecompressed) {
      const auto w = optimal_omega_f(*ext[i].m3, d[i]);
      if (!w) return std::nullopt;
      omega = *w;
      fog_hz = h0(*ext[i].m3, omega, d[i]);
      if (!std::isfinite(fog_hz)) return std::nullopt;
      // A degenerate zero-cycle workload asks for a zero rate, which the
      // delay model reads as "no fog CPU granted"; one Hz keeps it serving.
      fog_hz = std::max(fog_hz, 1.0);
    }
    fb.decisions[i] = ext_decision(ext[i], modes[i], d[i], fog_hz, omega);
    fb.fog_total += fog_hz;
    fb.backhaul_total += modes[i] == Mode::Fog ? 0.0 : d[i];
  }
  return fb;
}

bool fog_fits(double fog_total, const SystemConfig& sys) {
  return fog_total <= sys.f_fog_max * (1.0 + kCapacityRelTol);
}

}  // namespace

std::optional<FeasibilityB> solve_fv_pla(const std::vector<UserProfile>& users,
                                         const std::vector<int>& set_b,
                                         const SystemConfig& sys, double eta,
                                         int segments, int* blocking_user) {
  auto ext = build_ext_users(users, set_b, sys, eta, blocking_user);
  if (!ext) return std::nullopt;
  if (ext->empty()) return FeasibilityB{};

  std::vector<PickUser> menu(ext->size());
  for (std::size_t i = 0; i < ext->size(); ++i) {
    const ExtUser& e = (*ext)[i];
    if (e.fog) menu[i].opts.push_back({e.fog->value, 0.0, 0.0, 0.0, Mode::Fog});
    if (e.cloud)
      menu[i].opts.push_back(
          {0.0, e.cloud->value, 0.0, e.cloud->value, Mode::Cloud});
    if (e.m3 && e.cloud) {
      const PlaTable t = build_pla_table(*e.m3, e.cloud->value, segments);
      if (t.usable())
        for (std::size_t l = 0; l < t.slopes.size(); ++l)
          menu[i].opts.push_back({t.f_values[l], t.breakpoints[l], t.slopes[l],
                                  t.breakpoints[l + 1],
                                  Mode::CloudRecompressed});
    }
  }
  const auto pick = pick_min_fog(menu, sys.d_max);
  if (!pick || !fog_fits(pick->fog_total, sys)) return std::nullopt;

  std::vector<Mode> modes(ext->size());
  for (std::size_t i = 0; i < ext->size(); ++i)
    modes[i] = menu[i].opts[pick->choice[i]].mode;
  // The chord model over-estimates fog demand, so deploying the true curve
  // value at the selected rates can only help the pool.
  return assemble(*ext, modes, pick->d);
}

namespace {

// The sweep may stop once the recompressed route is dominated for every user
// that could take the fog instead and the forwarding rates fit the backhaul
// outright; both effects are monotone in the price.
bool sweep_done(const std::vector<ExtUser>& ext, const SystemConfig& sys,
                double lambda_norm) {
  double total = 0.0;
  for (const auto& e : ext) {
    if (!e.m3 || !e.cloud) continue;
    const auto d =
        d_of_lambda(*e.m3, lambda_norm * kLambdaSi, e.cloud->value);
    if (!d) continue;  // priced out entirely: dominated and zero backhaul
    total += *d;
    if (e.fog) {
      const auto w = optimal_omega_f(*e.m3, *d);
      if (w && h0(*e.m3, *w, *d) < e.fog->value) return false;
    }
  }
  return total <= sys.d_max;
}

double lambda_max_auto(const std::vector<ExtUser>& ext,
                       const SystemConfig& sys, double delta_lambda) {
  if (sweep_done(ext, sys, 1e-9)) return 0.0;
  double hi = std::max(delta_lambda, 1e-3);
  while (!sweep_done(ext, sys, hi)) {
    hi *= 2.0;
    if (hi > 1e6) return 1e6;
  }
  double lo = hi * 0.5;
  while (hi - lo > std::max(1e-2 * delta_lambda, 1e-12 * hi)) {
    const double mid = 0.5 * (lo + hi);
    if (sweep_done(ext, sys, mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

std::optional<FeasibilityB> solve_fv_osts(
    const std::vector<UserProfile>& users, const std::vector<int>& set_b,
    const SystemConfig& sys, double eta, double delta_lambda,
    double lambda_max_override, int* blocking_user) {
  if (!(delta_lambda > 0.0))
    throw std::invalid_argument("solve_fv_osts: delta_lambda must be > 0");
  auto ext = build_ext_users(users, set_b, sys, eta, blocking_user);
  if (!ext) return std::nullopt;
  if (ext->empty()) return FeasibilityB{};

  const double lambda_max = lambda_max_override >= 0.0
                                ? lambda_max_override
                                : lambda_max_auto(*ext, sys, delta_lambda);
  constexpr long kMaxSteps = 200000;
  for (long step = 0;; ++step) {
    const double lambda = delta_lambda * static_cast<double>(step);
    if ((step > 0 && lambda > lambda_max) || step > kMaxSteps) break;

    std::vector<PickUser> menu(ext->size());
    std::vector<std::optional<double>> d3(ext->size());
    for (std::size_t i = 0; i < ext->size(); ++i) {
      const ExtUser& e = (*ext)[i];
      if (e.fog)
        menu[i].opts.push_back({e.fog->value, 0.0, 0.0, 0.0, Mode::Fog});
      if (e.cloud)
        menu[i].opts.push_back(
            {0.0, e.cloud->value, 0.0, e.cloud->value, Mode::Cloud});
      if (e.m3 && e.cloud) {
        d3[i] = lambda > 0.0 ? d_of_lambda(*e.m3, lambda * kLambdaSi,
                                           e.cloud->value)
                             : std::optional<double>(e.cloud->value);
        if (d3[i]) {
          const auto w = optimal_omega_f(*e.m3, *d3[i]);
          const double f = w ? h0(*e.m3, *w, *d3[i]) : kInf;
          if (std::isfinite(f))
            menu[i].opts.push_back(
                {f, *d3[i], 0.0, *d3[i], Mode::CloudRecompressed});
        }
      }
    }
    const auto pick = pick_min_fog(menu, sys.d_max);
    if (pick && fog_fits(pick->fog_total, sys)) {
      std::vector<Mode> modes(ext->size());
      for (std::size_t i = 0; i < ext->size(); ++i)
        modes[i] = menu[i].opts[pick->choice[i]].mode;
      return assemble(*ext, modes, pick->d);
    }
  }
  return std::nullopt;
}

std::array<double, 3> project_mode_simplex(const std::array<double, 3>& s) {
  std::array<double, 3> v;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    v[i] = std::max(0.0, s[i]);
    sum += v[i];
  }
  if (sum <= 1.0) return v;
  // Project onto the face sum == 1: find the shift tau with
  // sum_i max(0, v_i - tau) == 1 over the sorted entries.
  std::array<double, 3> sorted = v;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double acc = 0.0, tau = 0.0;
  for (int k = 0; k < 3; ++k) {
    acc += sorted[k];
    const double t = (acc - 1.0) / (k + 1);
    if (k == 2 || t >= sorted[k + 1]) {
      tau = t;
      break;
    }
  }
  for (int i = 0; i < 3; ++i) v[i] = std::max(0.0, v[i] - tau);
  return v;
}

double iuts_lambda_step(double lambda, double step, double usage, double cap) {
  return std::max(0.0, lambda + step * (usage - cap));
}

std::optional<FeasibilityB> solve_fv_iuts(
    const std::vector<UserProfile>& users, const std::vector<int>& set_b,
    const SystemConfig& sys, double eta, int max_iters, bool* converged,
    int* blocking_user) {
  if (converged) *converged = false;
  if (max_iters < 1)
    throw std::invalid_argument("solve_fv_iuts: max_iters must be >= 1");
  auto ext = build_ext_users(users, set_b, sys, eta, blocking_user);
  if (!ext) return std::nullopt;
  const int nb = static_cast<int>(ext->size());
  if (nb == 0) {
    if (converged) *converged = true;
    return FeasibilityB{};
  }

  // Relaxed mode shares per user, stored as [recompressed, fog, cloud];
  // unavailable routes keep a prohibitive gradient so their share decays.
  constexpr double kBigNorm = 1e9;
  constexpr double kStep = 0.1;  // fixed projected-gradient step
  std::vector<std::array<double, 3>> s(nb, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  double lambda = 1.0;  // GHz per Mbit/s
  const double cap_m = sys.d_max / kMbps;

  struct Snapshot {
    std::vector<Mode> modes;
    std::vector<double> d;
    double fog_total = kInf;
  };
  Snapshot best_seen;

  std::vector<std::optional<double>> d3(nb);
  std::vector<double> f3(nb, kInf);
  for (int n = 1; n <= max_iters; ++n) {
    for (int i = 0; i < nb; ++i) {
      const ExtUser& e = (*ext)[i];
      d3[i] = std::nullopt;
      f3[i] = kInf;
      if (!e.m3 || !e.cloud) continue;
      d3[i] = lambda > 0.0 ? d_of_lambda(*e.m3, lambda * kLambdaSi,
                                         e.cloud->value)
                           : std::optional<double>(e.cloud->value);
      if (d3[i]) {
        const auto w = optimal_omega_f(*e.m3, *d3[i]);
        if (w) f3[i] = h0(*e.m3, *w, *d3[i]);
      }
    }

    double usage_m = 0.0;
    for (int i = 0; i < nb; ++i) {
      if (d3[i]) usage_m += s[i][0] * (*d3[i] / kMbps);
      if ((*ext)[i].cloud) usage_m += s[i][2] * ((*ext)[i].cloud->value / kMbps);
    }
    const double lambda_next = iuts_lambda_step(
        lambda, 1.0 / std::sqrt(static_cast<double>(n)), usage_m, cap_m);

    double s_move = 0.0;
    for (int i = 0; i < nb; ++i) {
      const ExtUser& e = (*ext)[i];
      std::array<double, 3> g;
      g[0] = d3[i] && std::isfinite(f3[i])
                 ? f3[i] / kGHz + lambda * (*d3[i] / kMbps)
                 : kBigNorm;
      g[1] = e.fog ? e.fog->value / kGHz : kBigNorm;
      g[2] = e.cloud ? lambda * (e.cloud->value / kMbps) : kBigNorm;
      const auto next = project_mode_simplex(
          {s[i][0] - kStep * g[0], s[i][1] - kStep * g[1],
           s[i][2] - kStep * g[2]});
      for (int j = 0; j < 3; ++j)
        s_move = std::max(s_move, std::abs(next[j] - s[i][j]));
      s[i] = next;
    }

    // Round the shares to one available route per user, then repair the
    // backhaul greedily: relieve overuse at the smallest fog increase, then
    // spend slack on the largest fog saving that still fits.
    Snapshot cand;
    cand.modes.assign(nb, Mode::Fog);
    cand.d.assign(nb, 0.0);
    bool ok = true;
    std::vector<double> fog(nb, 0.0);
    for (int i = 0; i < nb && ok; ++i) {
      const ExtUser& e = (*ext)[i];
      int pick = -1;
      double sbest = -kInf;
      const bool avail[3] = {d3[i].has_value() && std::isfinite(f3[i]),
                             e.fog.has_value(), e.cloud.has_value()};
      for (int j = 0; j < 3; ++j)
        if (avail[j] && s[i][j] > sbest) {
          sbest = s[i][j];
          pick = j;
        }
      if (pick < 0) ok = false;
      if (!ok) break;
      if (pick == 0) {
        cand.modes[i] = Mode::CloudRecompressed;
        cand.d[i] = *d3[i];
        fog[i] = f3[i];
      } else if (pick == 1) {
        cand.modes[i] = Mode::Fog;
        fog[i] = e.fog->value;
      } else {
        cand.modes[i] = Mode::Cloud;
        cand.d[i] = e.cloud->value;
      }
    }
    if (ok) {
      double used = 0.0;
      for (int i = 0; i < nb; ++i) used += cand.d[i];
      while (used > sys.d_max) {
        int pick = -1;
        double inc_best = kInf;
        for (int i = 0; i < nb; ++i) {
          if (cand.modes[i] == Mode::Fog || !(*ext)[i].fog) continue;
          const double inc = (*ext)[i].fog->value - fog[i];
          if (inc < inc_best) {
            inc_best = inc;
            pick = i;
          }
        }
        if (pick < 0) {
          ok = false;
          break;
        }
        used -= cand.d[pick];
        cand.modes[pick] = Mode::Fog;
        cand.d[pick] = 0.0;
        fog[pick] = (*ext)[pick].fog->value;
      }
      while (ok) {
        int pick = -1, to = -1;
        double save_best = 0.0;
        for (int i = 0; i < nb; ++i) {
          if (cand.modes[i] == Mode::Cloud) continue;
          const ExtUser& e = (*ext)[i];
          const double room = sys.d_max - (used - cand.d[i]);
          if (e.cloud && e.cloud->value <= room && fog[i] > save_best) {
            save_best = fog[i];
            pick = i;
            to = 2;
          }
          if (cand.modes[i] == Mode::Fog && d3[i] && std::isfinite(f3[i]) &&
              *d3[i] <= room && fog[i] - f3[i] > save_best) {
            save_best = fog[i] - f3[i];
            pick = i;
            to = 0;
          }
        }
        if (pick < 0) break;
        used -= cand.d[pick];
        if (to == 2) {
          cand.modes[pick] = Mode::Cloud;
          cand.d[pick] = (*ext)[pick].cloud->value;
          fog[pick] = 0.0;
        } else {
          cand.modes[pick] = Mode::CloudRecompressed;
          cand.d[pick] = *d3[pick];
          fog[pick] = f3[pick];
        }
        used += cand.d[pick];
      }
    }
    if (ok) {
      cand.fog_total = 0.0;
      for (int i = 0; i < nb; ++i) cand.fog_total += fog[i];
      if (fog_fits(cand.fog_total, sys) &&
          cand.fog_total < best_seen.fog_total)
        best_seen = std::move(cand);
    }

    const bool settled = std::abs(lambda_next - lambda) <=
                             1e-9 * std::max(1.0, lambda) &&
                         s_move <= 1e-9;
    lambda = lambda_next;
    if (settled) {
      if (converged) *converged = true;
      break;
    }
  }

  if (!std::isfinite(best_seen.fog_total)) return std::nullopt;
  return assemble(*ext, best_seen.modes, best_seen.d);
}

Solution solve_ext(const Instance& inst, double epsilon,
                   const std::string& algo, int segments, double delta_lambda,
                   int max_iters) {
  VerifyFn verify;
  if (algo == "pla") {
    verify = [&inst, segments](const std::vector<int>& set_b, double eta,
                               int* blocking) {
      return solve_fv_pla(inst.users, set_b, inst.config, eta, segments,
                          blocking);
    };
  } else if (algo == "osts") {
    verify = [&inst, delta_lambda](const std::vector<int>& set_b, double eta,
                                   int* blocking) {
      return solve_fv_osts(inst.users, set_b, inst.config, eta, delta_lambda,
                           -1.0, blocking);
    };
  } else if (algo == "iuts") {
    verify = [&inst, max_iters](const std::vector<int>& set_b, double eta,
                                int* blocking) {
      return solve_fv_iuts(inst.users, set_b, inst.config, eta, max_iters,
                           nullptr, blocking);
    };
  } else {
    throw std::invalid_argument("solve_ext: unknown algorithm '" + algo +
                                "' (expected pla, osts, or iuts)");
  }
  return solve_with(inst, epsilon, verify);
}

}  // namespace cato
