#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cato/bench.hpp"
#include "cato/model.hpp"
#include "cato/oracle.hpp"
#include "cato/solver.hpp"
#include "support.hpp"

using namespace cato;
using cato::testing::default_config;
using cato::testing::default_user;
using cato::testing::next_uniform;
using cato::testing::rel_err;

namespace {

// User whose local optimum is exactly `target`: energy-only weights make the
// cost alpha * c^3 with the deadline pinning f = c, and powers of two keep
// the arithmetic exact in floating point.
UserProfile user_with_local_cost(double target) {
  UserProfile u;
  u.c_total = 1024.0;
  u.c_local = 1024.0;
  u.t_max = 1.0;
  u.f_max = 1e12;
  u.w_e = 1.0;
  u.w_t = 0.0;
  u.alpha = target / (1024.0 * 1024.0 * 1024.0);
  return u;
}

// Exhaustive reference for small knapsacks.
double knapsack_best_value(const std::vector<double>& values,
                           const std::vector<double>& weights, double cap) {
  const int n = static_cast<int>(values.size());
  double best = 0.0;
  for (int mask = 0; mask < (1 << n); ++mask) {
    double v = 0.0, w = 0.0;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) {
        v += values[i];
        w += weights[i];
      }
    if (w <= cap) best = std::max(best, v);
  }
  return best;
}

// Exhaustive fog/cloud assignment check used against verify_feasibility_b:
// try all 2^|B| splits using the same per-user minimum resources.
bool enumerate_feasible(const std::vector<UserProfile>& users,
                        const std::vector<int>& set_b, const SystemConfig& sys,
                        double eta) {
  const int nb = static_cast<int>(set_b.size());
  std::vector<double> f_rq(nb, kInf), d_rq(nb, kInf);
  for (int i = 0; i < nb; ++i) {
    if (const auto r = solve_p3(users[set_b[i]], sys, eta)) f_rq[i] = r->value;
    if (const auto r = solve_p4(users[set_b[i]], sys, eta)) d_rq[i] = r->value;
  }
  for (int mask = 0; mask < (1 << nb); ++mask) {
    double fog = 0.0, bh = 0.0;
    for (int i = 0; i < nb; ++i) {
      if (mask & (1 << i))
        bh += d_rq[i];
      else
        fog += f_rq[i];
    }
    if (fog <= sys.f_fog_max * (1.0 + 1e-6) && bh <= sys.d_max * (1.0 + 1e-6))
      return true;
  }
  return false;
}

Instance two_user_instance(std::uint64_t seed) {
  Instance inst = generate_instance(seed, 2);
  return inst;
}

}  // namespace

TEST_CASE("eta_local reproduces the closed-form reference value") {
  UserProfile u = default_user(400.0);  // c_total = 2e9, alpha 1e-28
  u.t_max = 1.0;
  u.f_max = 2.4e9;
  // Stationary point cbrt(w_t / (2 w_e alpha)) = 1.357e9 sits below the
  // deadline floor c/t_max = 2e9, so the floor is optimal: cost 13/15.
  CHECK(rel_err(eta_local(u), 13.0 / 15.0) <= 1e-12);
  CHECK(rel_err(eta_local_rate(u), 2e9) <= 1e-12);
  // Independent 1-D scan oracle.
  CHECK(rel_err(eta_local(u), grid_eta_local(u, default_config(), 4096)) <= 1e-9);
}

TEST_CASE("eta_local energy-only weights minimize at the deadline floor") {
  UserProfile u = default_user(400.0);
  u.w_t = 0.0;
  u.w_e = 1.0;
  const double f_min = u.c_total / u.t_max;
  CHECK(rel_err(eta_local(u), u.w_e * u.alpha * f_min * f_min * u.c_total) <=
        1e-12);
  CHECK(eta_local_rate(u) == f_min);
}

TEST_CASE("eta_local is infinite when the deadline cannot be met locally") {
  UserProfile u = default_user(400.0);
  u.c_total = 3e9;  // needs 3 GHz, device caps at 2.4 GHz
  CHECK(eta_local(u) == kInf);
  u.c_total = 2e9;
  u.t_max = 0.0;
  CHECK(eta_local(u) == kInf);
}

TEST_CASE("eta_local without deadline or delay weight is free") {
  UserProfile u = default_user(400.0);
  u.t_max = kInf;
  u.w_t = 0.0;
  u.w_e = 1.0;
  CHECK(eta_local(u) == 0.0);
}

TEST_CASE("classify applies the threshold rule with inclusive ties") {
  std::vector<UserProfile> users = {user_with_local_cost(0.5),
                                    user_with_local_cost(0.9),
                                    user_with_local_cost(1.2)};
  REQUIRE(eta_local(users[0]) == 0.5);  // powers of two: exact
  const auto mid = classify(users, 1.0);
  CHECK(mid.set_a == std::vector<int>{0, 1});
  CHECK(mid.set_b == std::vector<int>{2});
  const auto none = classify(users, 0.0);
  CHECK(none.set_a.empty());
  CHECK(none.set_b.size() == 3);
  const auto all = classify(users, 1.2);  // tie at the top goes local
  CHECK(all.set_b.empty());
  const auto tie = classify(users, 0.5);
  CHECK(tie.set_a == std::vector<int>{0});
}

TEST_CASE("knapsack01 frozen three-item selection") {
  const std::vector<double> values = {5e9, 4e9, 3e9};
  const std::vector<double> weights = {10e6, 8e6, 6e6};
  const auto r = knapsack01(values, weights, 14e6);
  REQUIRE(r.feasible);
  CHECK(r.selected == std::vector<int>{1, 2});
  CHECK(rel_err(r.residual_value, 5e9) <= 1e-15);
  CHECK(rel_err(r.selected_weight, 14e6) <= 1e-15);
  CHECK(r.approx_error == 0.0);
}

TEST_CASE("knapsack01 degenerate capacities") {
  const std::vector<double> values = {5.0, 4.0, 3.0};
  const std::vector<double> weights = {10.0, 8.0, 6.0};
  const auto zero = knapsack01(values, weights, 0.0);
  CHECK(zero.selected.empty());
  CHECK(rel_err(zero.residual_value, 12.0) <= 1e-15);
  const auto all = knapsack01(values, weights, 24.0);
  CHECK(all.selected == std::vector<int>{0, 1, 2});
  CHECK(all.residual_value == 0.0);
}

TEST_CASE("knapsack01 honours forced assignments") {
  const std::vector<double> values = {5.0, 4.0, 3.0};
  const std::vector<double> weights = {10.0, 8.0, 6.0};
  const auto r = knapsack01(values, weights, 14.0, {0}, {1});
  REQUIRE(r.feasible);
  // Item 0 consumes 10 of 14; only item 2 (weight 6) remains and no longer
  // fits, and item 1 is barred, so the fog keeps items 1 and 2.
  CHECK(r.selected == std::vector<int>{0});
  CHECK(rel_err(r.residual_value, 7.0) <= 1e-15);
  const auto bad = knapsack01(values, weights, 9.0, {0});
  CHECK(!bad.feasible);
}

TEST_CASE("knapsack01 matches exhaustive search on random instances") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(next_uniform(rng) * 11);
    std::vector<double> values(n), weights(n);
    double total_w = 0.0;
    for (int i = 0; i < n; ++i) {
      values[i] = next_uniform(rng) * 10.0;
      weights[i] = next_uniform(rng) * 5.0;
      total_w += weights[i];
    }
    const double cap = next_uniform(rng) * total_w;
    const auto got = knapsack01(values, weights, cap);
    REQUIRE(got.feasible);
    double got_value = 0.0, got_weight = 0.0;
    for (int i : got.selected) {
      got_value += values[i];
      got_weight += weights[i];
    }
    CAPTURE(trial);
    CHECK(got_weight <= cap * (1.0 + 1e-12));
    CHECK(rel_err(got_value, knapsack_best_value(values, weights, cap)) <=
          1e-12);
  }
}

TEST_CASE("knapsack01 DP fallback stays exact-feasible and reports its gap") {
  // 10 meaningful items plus 20 oversize blockers force the DP path
  // (30 free items) while keeping the exhaustive reference tractable.
  std::mt19937_64 rng(7);
  std::vector<double> values, weights;
  const double cap = 100.0;
  for (int i = 0; i < 10; ++i) {
    values.push_back(1.0 + next_uniform(rng) * 9.0);
    weights.push_back(5.0 + next_uniform(rng) * 30.0);
  }
  for (int i = 0; i < 20; ++i) {
    values.push_back(0.5);
    weights.push_back(cap * 2.0);
  }
  const auto got = knapsack01(values, weights, cap);
  REQUIRE(got.feasible);
  double got_value = 0.0, got_weight = 0.0;
  for (int i : got.selected) {
    got_value += values[i];
    got_weight += weights[i];
  }
  std::vector<double> head_v(values.begin(), values.begin() + 10);
  std::vector<double> head_w(weights.begin(), weights.begin() + 10);
  const double best = knapsack_best_value(head_v, head_w, cap);
  CHECK(got_weight <= cap * (1.0 + 1e-12));
  CHECK(got.approx_error >= 0.0);
  CHECK(got_value + got.approx_error >= best * (1.0 - 1e-12));
  CHECK(got_value <= best * (1.0 + 1e-12));
}

TEST_CASE("verify_feasibility_b accepts an empty offloading set") {
  const std::vector<UserProfile> users = {default_user(400.0)};
  const auto r = verify_feasibility_b(users, {}, default_config(), 0.5);
  REQUIRE(r.has_value());
  CHECK(r->fog_total == 0.0);
  CHECK(r->backhaul_total == 0.0);
  CHECK(r->decisions.empty());
}

TEST_CASE("verify_feasibility_b names a user who cannot offload at all") {
  const std::vector<UserProfile> users = {default_user(200.0),
                                          default_user(400.0)};
  int blocking = -2;
  const auto r =
      verify_feasibility_b(users, {0, 1}, default_config(), 1e-6, &blocking);
  CHECK(!r.has_value());
  CHECK((blocking == 0 || blocking == 1));
}

TEST_CASE("verify_feasibility_b agrees with exhaustive mode enumeration") {
  Instance inst = generate_instance(11, 3);
  const std::vector<int> set_b = {0, 1, 2};
  for (const double eta : {0.35, 0.45, 0.6, 0.9}) {
    // Squeeze the pools so the verdict actually varies with eta.
    SystemConfig sys = inst.config;
    sys.f_fog_max = 3e9;
    sys.d_max = 4e6;
    const bool expect = enumerate_feasible(inst.users, set_b, sys, eta);
    const auto got = verify_feasibility_b(inst.users, set_b, sys, eta);
    CAPTURE(eta);
    CHECK(got.has_value() == expect);
    if (got) {
      CHECK(got->fog_total <= sys.f_fog_max * (1.0 + 1e-6));
      CHECK(got->backhaul_total <= sys.d_max * (1.0 + 1e-6));
      // Decisions respect the per-user constraints including aggregates.
      for (std::size_t i = 0; i < set_b.size(); ++i) {
        PeerTotals peers;
        for (std::size_t j = 0; j < set_b.size(); ++j) {
          if (j == i) continue;
          peers.fog_hz += got->decisions[j].f_f;
          peers.backhaul_bps += got->decisions[j].d;
        }
        CHECK(validate(got->decisions[i], inst.users[set_b[i]], sys, peers)
                  .feasible());
        CHECK(wedc(got->decisions[i], inst.users[set_b[i]], sys) <=
              eta * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("dropping a user from the offloading set never raises fog demand") {
  Instance inst = generate_instance(13, 3);
  SystemConfig sys = inst.config;
  const double eta = 0.5;
  const auto full = verify_feasibility_b(inst.users, {0, 1, 2}, sys, eta);
  REQUIRE(full.has_value());
  for (int drop = 0; drop < 3; ++drop) {
    std::vector<int> reduced;
    for (int i = 0; i < 3; ++i)
      if (i != drop) reduced.push_back(i);
    const auto r = verify_feasibility_b(inst.users, reduced, sys, eta);
    REQUIRE(r.has_value());
    CHECK(r->fog_total <= full->fog_total * (1.0 + 1e-9));
  }
}

TEST_CASE("solve with offloading disabled returns the local optimum") {
  Instance inst = generate_instance(3, 1);
  inst.users[0].rho_max = 0.0;
  const Solution sol = solve(inst, 1e-4);
  CHECK(rel_err(sol.eta_star, eta_local(inst.users[0])) <= 2e-4);
  CHECK(sol.classification.set_b.empty());
  CHECK(sol.decisions[0].mode == Mode::Local);
}

TEST_CASE("solve under starved shared resources settles at the local worst") {
  Instance inst = generate_instance(5, 3);
  inst.config.f_fog_max = 1.0;  // 1 Hz fog, 1 bit/s backhaul: nobody offloads
  inst.config.d_max = 1.0;
  double worst = 0.0;
  for (const auto& u : inst.users) worst = std::max(worst, eta_local(u));
  const Solution sol = solve(inst, 1e-4);
  CHECK(rel_err(sol.eta_star, worst) <= 2e-4);
  for (const auto& d : sol.decisions) CHECK(d.mode == Mode::Local);
}

TEST_CASE("solve solution satisfies every declared invariant") {
  Instance inst = generate_instance(21, 4);
  inst.config.f_fog_max = 6e9;  // tight enough that offloading choices matter
  inst.config.d_max = 6e6;
  const double eps = 1e-3;
  const Solution sol = solve(inst, eps);
  REQUIRE(sol.decisions.size() == inst.users.size());

  // Threshold structure at the solution.
  for (int k = 0; k < 4; ++k) {
    const bool in_a =
        std::count(sol.classification.set_a.begin(),
                   sol.classification.set_a.end(), k) > 0;
    CHECK(in_a == (eta_local(inst.users[k]) <= sol.eta_star));
  }

  // Aggregates within capacity; every user within the cost bound.
  CHECK(sol.fog_total <= inst.config.f_fog_max * (1.0 + 1e-6));
  CHECK(sol.backhaul_total <= inst.config.d_max * (1.0 + 1e-6));
  double fog_sum = 0.0, bh_sum = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Decision& d = sol.decisions[k];
    fog_sum += d.f_f;
    bh_sum += d.d;
    CHECK(wedc(d, inst.users[k], inst.config) <= sol.eta_star + eps);
    PeerTotals peers;
    for (int j = 0; j < 4; ++j) {
      if (j == k) continue;
      peers.fog_hz += sol.decisions[j].f_f;
      peers.backhaul_bps += sol.decisions[j].d;
    }
    CHECK(validate(d, inst.users[k], inst.config, peers).feasible());
  }
  CHECK(rel_err(fog_sum, sol.fog_total) <= 1e-9);
  CHECK(rel_err(bh_sum, sol.backhaul_total) <= 1e-9);
  CHECK(sol.iterations > 0);

  // Bisection monotonicity: anything above eta_star stays feasible.
  for (const double scale : {1.1, 1.5, 3.0}) {
    const auto cls = classify(inst.users, sol.eta_star * scale);
    CHECK(verify_feasibility_b(inst.users, cls.set_b, inst.config,
                               sol.eta_star * scale)
              .has_value());
  }
}

TEST_CASE("solve cost never rises when shared capacity grows") {
  Instance inst = generate_instance(31, 3);
  inst.config.f_fog_max = 2.5e9;
  inst.config.d_max = 3e6;
  const Solution tight = solve(inst, 1e-3);
  Instance wide_fog = inst;
  wide_fog.config.f_fog_max = 15e9;
  const Solution more_fog = solve(wide_fog, 1e-3);
  Instance wide_bh = inst;
  wide_bh.config.d_max = 25e6;
  const Solution more_bh = solve(wide_bh, 1e-3);
  CHECK(more_fog.eta_star <= tight.eta_star + 2e-3);
  CHECK(more_bh.eta_star <= tight.eta_star + 2e-3);
}

TEST_CASE("solve throws a named infeasibility when a user can run nowhere") {
  Instance inst = generate_instance(41, 2);
  inst.users[1].c_total = 1e12;  // far beyond the device within the deadline
  inst.users[1].c_local = 1e11;
  inst.users[1].c_offloadable = 9e11;
  inst.users[1].rho_max = 0.0;  // and offloading is impossible
  try {
    (void)solve(inst, 1e-3);
    FAIL("expected InfeasibleInstance");
  } catch (const InfeasibleInstance& e) {
    CHECK(e.user == 1);
    CHECK(std::string(e.what()).find("user 1") != std::string::npos);
  }
}

TEST_CASE("solve matches the brute-force grid oracle on a two-user instance") {
  Instance inst = two_user_instance(17);
  inst.config.f_fog_max = 4e9;  // make offloading contested
  inst.config.d_max = 5e6;
  const Solution sol = solve(inst, 1e-3);
  GridSpec spec;
  spec.points_omega = spec.points_f = spec.points_power = spec.points_rho = 48;
  const GridSolveResult ref = grid_solve(inst, spec);
  REQUIRE(std::isfinite(ref.eta));
  CAPTURE(sol.eta_star);
  CAPTURE(ref.eta);
  CHECK(std::abs(sol.eta_star - ref.eta) / ref.eta <= 0.03);
}
