#include "cato/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <string>

namespace cato {

namespace {

constexpr double kCapacityRelTol = 1e-6;  // aggregate (pool) feasibility slack

// Clamp that tolerates an inverted interval by preferring the upper end
// (callers only hit that when the bound itself is infeasible).
double clamp_rate(double f, double lo, double hi) {
  return std::min(hi, std::max(f, lo));
}

double local_cost_at(const UserProfile& u, double f) {
  double q = u.w_e * u.alpha * f * f * u.c_total;
  if (u.w_t > 0.0) q += f > 0.0 ? u.w_t * u.c_total / f : kInf;
  return q;
}

// ---------------------------------------------------------------------------
// 0-1 knapsack back ends (free items only; forced items handled by caller).

// Depth-first branch and bound with the fractional-relaxation upper bound.
// Items arrive sorted by value density, which makes the bound tight.
struct BnbItem {
  double value;
  double weight;
  int index;
};

void bnb_search(const std::vector<BnbItem>& items, std::size_t k, double cap,
                double value, std::uint32_t chosen, double* best_value,
                std::uint32_t* best_set) {
  if (value > *best_value) {
    *best_value = value;
    *best_set = chosen;
  }
  if (k == items.size()) return;
  // Fractional fill of the remaining capacity bounds every completion.
  double bound = value;
  double room = cap;
  for (std::size_t i = k; i < items.size(); ++i) {
    if (items[i].weight <= room) {
      bound += items[i].value;
      room -= items[i].weight;
    } else {
      if (items[i].weight > 0.0) bound += items[i].value * room / items[i].weight;
      break;
    }
  }
  if (bound <= *best_value) return;
  if (items[k].weight <= cap)
    bnb_search(items, k + 1, cap - items[k].weight, value + items[k].value,
               chosen | (1u << k), best_value, best_set);
  bnb_search(items, k + 1, cap, value, chosen, best_value, best_set);
}

std::vector<int> knapsack_bnb(const std::vector<double>& values,
                              const std::vector<double>& weights,
                              const std::vector<int>& free, double cap) {
  std::vector<BnbItem> items;
  items.reserve(free.size());
  for (int i : free) items.push_back({values[i], weights[i], i});
  std::sort(items.begin(), items.end(), [](const BnbItem& a, const BnbItem& b) {
    const double da = a.weight > 0.0 ? a.value / a.weight : kInf;
    const double db = b.weight > 0.0 ? b.value / b.weight : kInf;
    if (da != db) return da > db;
    return a.index < b.index;
  });
  double best_value = -1.0;
  std::uint32_t best_set = 0;
  bnb_search(items, 0, cap, 0.0, 0, &best_value, &best_set);
  std::vector<int> out;
  for (std::size_t k = 0; k < items.size(); ++k)
    if (best_set & (1u << k)) out.push_back(items[k].index);
  return out;
}

// Weights rounded up to a grid never overshoot the true capacity. The value
// reachable with |free| extra grid units bounds the true optimum, so the
// difference to the achieved value bounds the approximation error.
std::vector<int> knapsack_dp(const std::vector<double>& values,
                             const std::vector<double>& weights,
                             const std::vector<int>& free, double cap,
                             double* approx_error) {
  const double grain = cap / 1e5;
  const int units = static_cast<int>(std::floor(cap / grain));
  const int n = static_cast<int>(free.size());
  const int relaxed = units + n + 1;
  std::vector<double> dp(relaxed + 1, 0.0);
  std::vector<std::vector<char>> take(n, std::vector<char>(relaxed + 1, 0));
  std::vector<int> wu(n);
  for (int k = 0; k < n; ++k) {
    const double w = weights[free[k]];
    wu[k] = static_cast<int>(std::ceil(w / grain - 1e-12));
    if (wu[k] < 0) wu[k] = 0;
  }
  for (int k = 0; k < n; ++k) {
    const double v = values[free[k]];
    if (wu[k] > relaxed) continue;
    for (int j = relaxed; j >= wu[k]; --j) {
      if (dp[j - wu[k]] + v > dp[j]) {
        dp[j] = dp[j - wu[k]] + v;
        take[k][j] = 1;
      }
    }
  }
  *approx_error = dp[relaxed] - dp[units];
  std::vector<int> out;
  int j = units;
  for (int k = n - 1; k >= 0; --k) {
    if (take[k][j]) {
      out.push_back(free[k]);
      j -= wu[k];
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double eta_local_rate(const UserProfile& u) {
  const double f_min =
      (std::isfinite(u.t_max) && u.t_max > 0.0) ? u.c_total / u.t_max : 0.0;
  const double denom = 2.0 * u.w_e * u.alpha;
  double f_sta;
  if (u.w_t <= 0.0)
    f_sta = 0.0;  // energy-only: run as slowly as the deadline allows
  else if (denom <= 0.0)
    f_sta = kInf;  // delay-only: run as fast as the device allows
  else
    f_sta = std::cbrt(u.w_t / denom);
  return clamp_rate(f_sta, f_min, u.f_max);
}

double eta_local(const UserProfile& u) {
  if (u.c_total <= 0.0) return 0.0;
  if (u.t_max <= 0.0) return kInf;
  if (std::isfinite(u.t_max) && u.c_total / u.t_max > u.f_max) return kInf;
  return local_cost_at(u, eta_local_rate(u));
}

Classification classify(const std::vector<UserProfile>& users, double eta) {
  Classification cls;
  for (int k = 0; k < static_cast<int>(users.size()); ++k) {
    if (eta_local(users[k]) <= eta)
      cls.set_a.push_back(k);
    else
      cls.set_b.push_back(k);
  }
  return cls;
}

KnapsackResult knapsack01(const std::vector<double>& values,
                          const std::vector<double>& weights, double capacity,
                          const std::vector<int>& forced_in,
                          const std::vector<int>& forced_out) {
  const int n = static_cast<int>(values.size());
  if (weights.size() != values.size())
    throw std::invalid_argument("knapsack01: values/weights size mismatch");
  for (int i = 0; i < n; ++i)
    if (values[i] < 0.0 || weights[i] < 0.0)
      throw std::invalid_argument("knapsack01: negative value or weight");

  std::vector<char> state(n, 0);  // 0 free, 1 forced in, 2 forced out
  for (int i : forced_in) {
    if (i < 0 || i >= n) throw std::invalid_argument("knapsack01: index range");
    state[i] = 1;
  }
  for (int i : forced_out) {
    if (i < 0 || i >= n) throw std::invalid_argument("knapsack01: index range");
    if (state[i] == 1)
      throw std::invalid_argument("knapsack01: forced sets overlap");
    state[i] = 2;
  }

  KnapsackResult res;
  double cap = capacity;
  for (int i = 0; i < n; ++i) {
    if (state[i] == 1) {
      res.selected.push_back(i);
      res.selected_weight += weights[i];
      cap -= weights[i];
    }
  }
  if (cap < -kCapacityRelTol * std::max(1.0, std::abs(capacity))) {
    res.feasible = false;
    for (int i = 0; i < n; ++i)
      if (state[i] != 1) res.residual_value += values[i];
    return res;
  }
  cap = std::max(cap, 0.0);

  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    if (state[i] == 0) free.push_back(i);

  std::vector<int> chosen;
  if (!std::isfinite(cap)) {
    chosen = free;
  } else if (cap <= 0.0) {
    for (int i : free)
      if (weights[i] == 0.0) chosen.push_back(i);
  } else if (static_cast<int>(free.size()) <= 24) {
    chosen = knapsack_bnb(values, weights, free, cap);
  } else {
    chosen = knapsack_dp(values, weights, free, cap, &res.approx_error);
  }
  for (int i : chosen) {
    res.selected.push_back(i);
    res.selected_weight += weights[i];
  }
  std::sort(res.selected.begin(), res.selected.end());
  std::vector<char> in_sel(n, 0);
  for (int i : res.selected) in_sel[i] = 1;
  for (int i = 0; i < n; ++i)
    if (!in_sel[i]) res.residual_value += values[i];
  return res;
}

Decision to_decision(const Stage1Result& r, Mode mode) {
  Decision dec;
  dec.mode = mode;
  dec.omega_u = std::exp(r.point.lw);
  dec.omega_f = std::isnan(r.point.lwf) ? dec.omega_u : std::exp(r.point.lwf);
  dec.f_u = std::exp(r.point.lfu);
  dec.f_f = std::isnan(r.point.lff) ? 0.0 : std::exp(r.point.lff);
  dec.p = std::exp(r.point.lp);
  dec.rho = std::exp(r.point.lr);
  dec.d = std::isnan(r.point.ld) ? 0.0 : std::exp(r.point.ld);
  return dec;
}

std::optional<FeasibilityB> verify_feasibility_b(
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
  std::vector<std::optional<Stage1Result>> fog(nb), cloud(nb);
  for (int i = 0; i < nb; ++i) {
    PairOpt pr = futs[i].get();
    fog[i] = std::move(pr.first);
    cloud[i] = std::move(pr.second);
  }

  std::vector<double> values(nb, 0.0), weights(nb, 0.0);
  std::vector<int> forced_in, forced_out;
  for (int i = 0; i < nb; ++i) {
    if (!fog[i] && !cloud[i]) {
      if (blocking_user) *blocking_user = set_b[i];
      return std::nullopt;
    }
    if (fog[i]) values[i] = fog[i]->value;
    if (cloud[i]) weights[i] = cloud[i]->value;
    if (!fog[i]) forced_in.push_back(i);
    if (!cloud[i]) forced_out.push_back(i);
  }

  const KnapsackResult ks =
      knapsack01(values, weights, sys.d_max, forced_in, forced_out);
  if (!ks.feasible) return std::nullopt;
  if (ks.residual_value > sys.f_fog_max * (1.0 + kCapacityRelTol))
    return std::nullopt;

  FeasibilityB out;
  out.fog_total = ks.residual_value;
  out.backhaul_total = ks.selected_weight;
  out.knapsack_error = ks.approx_error;
  std::vector<char> to_cloud(nb, 0);
  for (int i : ks.selected) to_cloud[i] = 1;
  out.decisions.reserve(nb);
  for (int i = 0; i < nb; ++i)
    out.decisions.push_back(to_cloud[i] ? to_decision(*cloud[i], Mode::Cloud)
                                        : to_decision(*fog[i], Mode::Fog));
  return out;
}

Solution solve_with(const Instance& inst, double epsilon,
                    const VerifyFn& verify) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("solve: epsilon must be > 0");
  const std::vector<UserProfile>& users = inst.users;
  const int k_users = static_cast<int>(users.size());

  std::vector<double> local_opt(k_users);
  double base = 0.0;
  bool any_unbounded = false;
  for (int k = 0; k < k_users; ++k) {
    local_opt[k] = eta_local(users[k]);
    if (std::isfinite(local_opt[k]))
      base = std::max(base, local_opt[k]);
    else
      any_unbounded = true;
  }

  struct Probe {
    Classification cls;
    FeasibilityB fb;
  };
  int iterations = 0;
  int blocking = -1;
  auto try_eta = [&](double eta, int* block) -> std::optional<Probe> {
    ++iterations;
    Probe pr;
    for (int k = 0; k < k_users; ++k) {
      if (local_opt[k] <= eta)
        pr.cls.set_a.push_back(k);
      else
        pr.cls.set_b.push_back(k);
    }
    auto fb = verify(pr.cls.set_b, eta, block);
    if (!fb) return std::nullopt;
    pr.fb = std::move(*fb);
    return pr;
  };

  double upper = any_unbounded ? std::max(base, 1.0) : base;
  std::optional<Probe> best = try_eta(upper, &blocking);
  if (!best) {
    const double cap = upper * 1e6;
    while (!best) {
      upper *= 2.0;
      if (upper > cap) {
        std::string msg = "no cost bound up to " + std::to_string(cap) +
                          " admits a feasible assignment";
        if (blocking >= 0)
          msg += " (user " + std::to_string(blocking) +
                 " cannot run locally or offload)";
        throw InfeasibleInstance(msg, blocking);
      }
      best = try_eta(upper, &blocking);
    }
  }

  double lower = 0.0;
  while (upper - lower > epsilon) {
    const double mid = 0.5 * (lower + upper);
    if (mid <= lower || mid >= upper) break;  // interval at fp resolution
    auto pr = try_eta(mid, nullptr);
    if (pr) {
      upper = mid;
      best = std::move(pr);
    } else {
      lower = mid;
    }
  }

  Solution sol;
  sol.eta_star = upper;
  sol.classification = best->cls;
  sol.iterations = iterations;
  sol.fog_total = best->fb.fog_total;
  sol.backhaul_total = best->fb.backhaul_total;
  sol.decisions.resize(k_users);
  for (int a : best->cls.set_a) {
    Decision dec;
    dec.mode = Mode::Local;
    dec.f_u = eta_local_rate(users[a]);
    sol.decisions[a] = dec;
  }
  for (std::size_t i = 0; i < best->cls.set_b.size(); ++i)
    sol.decisions[best->cls.set_b[i]] = best->fb.decisions[i];
  return sol;
}

Solution solve(const Instance& inst, double epsilon) {
  return solve_with(
      inst, epsilon,
      [&inst](const std::vector<int>& set_b, double eta, int* blocking) {
        return verify_feasibility_b(inst.users, set_b, inst.config, eta,
                                    blocking);
      });
}

}  // namespace cato
