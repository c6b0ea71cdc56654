#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cato/bench.hpp"
#include "cato/model.hpp"
#include "cato/oracle.hpp"
#include "support.hpp"

using namespace cato;
using cato::testing::default_config;
using cato::testing::default_user;
using cato::testing::rel_err;

TEST_CASE("scan_min_1d finds the parabola minimum to high precision") {
  const auto r = scan_min_1d([](double x) { return x * x; }, -1.0, 1.0, 101);
  CHECK(std::abs(r.arg) <= 1e-9);
  CHECK(r.value <= 1e-15);
}

TEST_CASE("scan_min_1d skips infinite regions") {
  const auto r = scan_min_1d(
      [](double x) {
        if (x < 0.3) return kInf;
        return (x - 0.5) * (x - 0.5) + 2.0;
      },
      -1.0, 1.0, 201);
  // Near a nonzero minimum value the argmin is only resolvable to about
  // sqrt(machine epsilon); the value itself is exact to full precision.
  CHECK(rel_err(r.arg, 0.5) <= 5e-7);
  CHECK(rel_err(r.value, 2.0) <= 1e-12);
}

TEST_CASE("scan_min_1d reports the lowest argument on a flat function") {
  const auto r = scan_min_1d([](double) { return 7.0; }, 2.0, 5.0, 120);
  CHECK(r.value == 7.0);
  CHECK(r.arg <= 2.0 + 1e-6);
}

TEST_CASE("scan_min_1d handles an all-infeasible interval") {
  const auto r = scan_min_1d([](double) { return kInf; }, 0.0, 1.0, 150);
  CHECK(!std::isfinite(r.value));
}

TEST_CASE("finite_diff_check matches a polynomial gradient to 1e-9") {
  const auto fn = [](const Eigen::VectorXd& x) {
    return x[0] * x[0] + 3.0 * x[0] * x[1] + x[1] * x[1] * x[1];
  };
  Eigen::VectorXd p(2), g(2);
  p << 0.7, -0.3;
  g << 2.0 * p[0] + 3.0 * p[1], 3.0 * p[0] + 3.0 * p[1] * p[1];
  CHECK(finite_diff_check(fn, p, g) <= 1e-9);
}

TEST_CASE("finite_diff_check flags a deliberately wrong gradient") {
  const auto fn = [](const Eigen::VectorXd& x) { return x[0] * x[0]; };
  Eigen::VectorXd p(1), g(1);
  p << 1.0;
  g << 2.02;  // one percent off
  CHECK(finite_diff_check(fn, p, g) > 1e-3);
}

TEST_CASE("local-only cost matches the frozen single-user value") {
  // c=2e9 cycles, f capped at 2.4e9 with a 1 s deadline forcing f >= 2e9:
  // the best boundary point gives 13/15.
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  CHECK(rel_err(grid_eta_local(u, sys), 13.0 / 15.0) <= 1e-9);

  Decision dec;
  dec.mode = Mode::Local;
  const auto r = scan_min_1d(
      [&](double f) {
        dec.f_u = f;
        return wedc(dec, u, sys);
      },
      u.c_total / u.t_max, u.f_max, 256);
  CHECK(rel_err(r.arg, 2.0e9) <= 1e-6);
}

TEST_CASE("grid_solve with offloading disabled reproduces the local optimum") {
  Instance inst = generate_instance(1, 1);
  inst.users[0] = default_user(400.0);
  inst.users[0].rho_max = 0.0;
  const auto r = grid_solve(inst, GridSpec{});
  CHECK(rel_err(r.eta, 13.0 / 15.0) <= 1e-9);
  REQUIRE(r.decisions.size() == 1);
  CHECK(r.decisions[0].mode == Mode::Local);
}

TEST_CASE("grid_solve accepts a degenerate one-point grid at a pinned optimum") {
  Instance inst = generate_instance(1, 1);
  inst.users[0] = default_user(400.0);
  inst.users[0].rho_max = 0.0;
  GridSpec spec;
  spec.points_omega = spec.points_f = spec.points_power = spec.points_rho = 1;
  const auto r = grid_solve(inst, spec);
  CHECK(rel_err(r.eta, 13.0 / 15.0) <= 1e-9);
}

TEST_CASE("grid_solve forced-local toggle matches the worst local optimum") {
  Instance inst = generate_instance(11, 2);
  GridSpec spec;
  spec.enumerate_modes = false;
  const auto r = grid_solve(inst, spec);
  double worst = 0.0;
  for (const auto& u : inst.users)
    worst = std::max(worst, grid_eta_local(u, inst.config));
  CHECK(rel_err(r.eta, worst) <= 1e-12);
  for (const auto& d : r.decisions) CHECK(d.mode == Mode::Local);
}

namespace {

// Aggregate helper loads of everyone except `self`.
PeerTotals peers_excluding(const std::vector<Decision>& ds, std::size_t self) {
  PeerTotals t;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (i == self) continue;
    if (ds[i].mode == Mode::Fog || ds[i].mode == Mode::CloudRecompressed)
      t.fog_hz += ds[i].f_f;
    if (ds[i].mode == Mode::Cloud || ds[i].mode == Mode::CloudRecompressed)
      t.backhaul_bps += ds[i].d;
  }
  return t;
}

}  // namespace

TEST_CASE("grid_solve returns a realizable assignment within its bound") {
  for (const std::uint64_t seed : {3ull, 17ull, 40ull}) {
    const Instance inst = generate_instance(seed, 2);
    GridSpec spec;
    spec.points_omega = spec.points_f = spec.points_power = spec.points_rho = 16;
    const auto r = grid_solve(inst, spec);
    REQUIRE(std::isfinite(r.eta));
    REQUIRE(r.decisions.size() == inst.users.size());
    for (std::size_t k = 0; k < inst.users.size(); ++k) {
      const auto rep = validate(r.decisions[k], inst.users[k], inst.config,
                                peers_excluding(r.decisions, k));
      CAPTURE(seed);
      CAPTURE(k);
      CHECK(rep.feasible());
      const double cost = wedc(r.decisions[k], inst.users[k], inst.config);
      CHECK(cost <= r.eta * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("grid_solve is monotone under nested grid refinement") {
  for (const std::uint64_t seed : {5ull, 23ull}) {
    const Instance inst = generate_instance(seed, 2);
    GridSpec coarse;
    coarse.points_omega = coarse.points_f = coarse.points_power =
        coarse.points_rho = 9;
    GridSpec mid = coarse;
    mid.points_omega = mid.points_f = mid.points_power = mid.points_rho = 17;
    GridSpec fine = coarse;
    fine.points_omega = fine.points_f = fine.points_power = fine.points_rho = 33;
    const double e0 = grid_solve(inst, coarse).eta;
    const double e1 = grid_solve(inst, mid).eta;
    const double e2 = grid_solve(inst, fine).eta;
    CAPTURE(seed);
    CHECK(e1 <= e0 * (1.0 + 1e-9));
    CHECK(e2 <= e1 * (1.0 + 1e-9));
  }
}

TEST_CASE("grid_solve is deterministic") {
  const Instance inst = generate_instance(29, 2);
  GridSpec spec;
  spec.points_omega = spec.points_f = spec.points_power = spec.points_rho = 12;
  const auto a = grid_solve(inst, spec);
  const auto b = grid_solve(inst, spec);
  CHECK(a.eta == b.eta);
  REQUIRE(a.decisions.size() == b.decisions.size());
  for (std::size_t k = 0; k < a.decisions.size(); ++k) {
    CHECK(a.decisions[k].mode == b.decisions[k].mode);
    CHECK(a.decisions[k].f_u == b.decisions[k].f_u);
    CHECK(a.decisions[k].omega_u == b.decisions[k].omega_u);
  }
}

TEST_CASE("grid_solve rejects oversized instances") {
  const Instance inst = generate_instance(1, 4);
  CHECK_THROWS_AS((void)grid_solve(inst, GridSpec{}), std::invalid_argument);
}

TEST_CASE("grid_min_helper demands shrink as the cost bound relaxes") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  GridSpec spec;
  spec.points_omega = spec.points_f = spec.points_power = spec.points_rho = 24;
  const auto tight_fog = grid_min_helper(u, sys, 0.85, Mode::Fog, 0.0, spec);
  const auto loose_fog = grid_min_helper(u, sys, 1.2, Mode::Fog, 0.0, spec);
  REQUIRE(tight_fog.has_value());
  REQUIRE(loose_fog.has_value());
  CHECK(*tight_fog > 0.0);
  CHECK(*loose_fog <= *tight_fog);

  const auto tight_cloud = grid_min_helper(u, sys, 0.85, Mode::Cloud, 0.0, spec);
  const auto loose_cloud = grid_min_helper(u, sys, 1.2, Mode::Cloud, 0.0, spec);
  REQUIRE(tight_cloud.has_value());
  REQUIRE(loose_cloud.has_value());
  CHECK(*loose_cloud <= *tight_cloud);
}

TEST_CASE("grid_min_helper returns nothing for an impossible bound") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  GridSpec spec;
  spec.points_omega = spec.points_f = spec.points_power = spec.points_rho = 16;
  CHECK(!grid_min_helper(u, sys, 1e-6, Mode::Fog, 0.0, spec).has_value());
  CHECK_THROWS_AS((void)grid_min_helper(u, sys, 1.0, Mode::Local, 0.0, spec),
                  std::invalid_argument);
}
