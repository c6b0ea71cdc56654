#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cato/bench.hpp"
#include "cato/convex.hpp"
#include "cato/model.hpp"
#include "cato/oracle.hpp"
#include "support.hpp"

using namespace cato;
using cato::testing::default_config;
using cato::testing::default_user;
using cato::testing::next_uniform;
using cato::testing::rel_err;

namespace {

// Independent reference for box-constrained quadratic programs: projected
// gradient descent with a conservative fixed step.
Eigen::VectorXd projected_gradient_qp(const Eigen::MatrixXd& Q,
                                      const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& lb,
                                      const Eigen::VectorXd& ub) {
  const double L =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(L, 1e-12);
  Eigen::VectorXd x = 0.5 * (lb + ub);
  for (int it = 0; it < 200000; ++it) {
    const Eigen::VectorXd g = Q * x + b;
    Eigen::VectorXd xn = x - step * g;
    for (int i = 0; i < x.size(); ++i) xn[i] = std::clamp(xn[i], lb[i], ub[i]);
    if ((xn - x).lpNorm<Eigen::Infinity>() < 1e-14) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

double qp_value(const Eigen::MatrixXd& Q, const Eigen::VectorXd& b,
                const Eigen::VectorXd& x) {
  return 0.5 * x.dot(Q * x) + b.dot(x);
}

Eigen::VectorXd interior_sample(const ConvexProblem& p, std::mt19937_64& rng) {
  Eigen::VectorXd x(p.n);
  for (int i = 0; i < p.n; ++i) {
    const double w = p.ub[i] - p.lb[i];
    x[i] = p.lb[i] + (0.1 + 0.8 * next_uniform(rng)) * w;
  }
  return x;
}

Decision decision_from(const Stage1Result& r, Mode mode) {
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

}  // namespace

TEST_CASE("minimize_convex solves a pure box LP at the corner") {
  ConvexProblem p;
  p.n = 2;
  p.cost.resize(2);
  p.cost << 1.0, -2.0;
  p.lb.resize(2);
  p.ub.resize(2);
  p.lb << -1.0, 0.0;
  p.ub << 3.0, 5.0;
  const auto x = minimize_convex(p);
  REQUIRE(x.has_value());
  CHECK(rel_err(p.cost.dot(*x), -11.0) <= 1e-6);
}

TEST_CASE("minimize_convex nails a 1-D quadratic minimizer") {
  ConvexProblem p;
  p.n = 1;
  p.cost = Eigen::VectorXd::Zero(1);
  p.objective.quad = Eigen::MatrixXd::Identity(1, 1);
  p.objective.lin = Eigen::VectorXd::Constant(1, -1.3);  // 0.5 x^2 - 1.3 x
  p.lb = Eigen::VectorXd::Constant(1, -10.0);
  p.ub = Eigen::VectorXd::Constant(1, 10.0);
  BarrierOptions opts;
  opts.gap_tol = 1e-12;
  const auto x = minimize_convex(p, opts);
  REQUIRE(x.has_value());
  CHECK(std::abs((*x)[0] - 1.3) <= 1e-10);
}

TEST_CASE("minimize_convex agrees with projected gradient on random QPs") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      b[i] = 2.0 * next_uniform(rng) - 1.0;
      for (int j = 0; j < n; ++j) M(i, j) = 2.0 * next_uniform(rng) - 1.0;
    }
    const Eigen::MatrixXd Q =
        M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(n, n);

    ConvexProblem p;
    p.n = n;
    p.cost = Eigen::VectorXd::Zero(n);
    p.objective.quad = Q;
    p.objective.lin = b;
    p.lb = Eigen::VectorXd::Constant(n, -1.0);
    p.ub = Eigen::VectorXd::Constant(n, 2.0);
    BarrierOptions opts;
    opts.gap_tol = 1e-10;
    const auto x = minimize_convex(p, opts);
    REQUIRE(x.has_value());

    const Eigen::VectorXd ref = projected_gradient_qp(Q, b, p.lb, p.ub);
    CAPTURE(trial);
    CHECK(std::abs(qp_value(Q, b, *x) - qp_value(Q, b, ref)) <=
          1e-6 * (1.0 + std::abs(qp_value(Q, b, ref))));
  }
}

TEST_CASE("minimize_convex proves an inconsistent linear system infeasible") {
  ConvexProblem p;
  p.n = 2;
  p.cost = Eigen::VectorXd::Ones(2);
  p.lb = Eigen::VectorXd::Zero(2);
  p.ub = Eigen::VectorXd::Ones(2);
  LinearIneq row;
  row.a = Eigen::VectorXd::Ones(2);
  row.b = -1.0;  // x0 + x1 <= -1 contradicts the box
  p.lin.push_back(row);
  CHECK(!minimize_convex(p).has_value());
}

TEST_CASE("phase I recovers from an infeasible center seed") {
  ConvexProblem p;
  p.n = 2;
  p.cost.resize(2);
  p.cost << 0.0, 1.0;
  p.lb = Eigen::VectorXd::Constant(2, -2.0);
  p.ub = Eigen::VectorXd::Constant(2, 2.0);
  LinearIneq row;  // x0 + x1 <= -1.5 cuts the center off
  row.a = Eigen::VectorXd::Ones(2);
  row.b = -1.5;
  p.lin.push_back(row);
  const auto x = minimize_convex(p);
  REQUIRE(x.has_value());
  CHECK((*x).sum() <= -1.5 + 1e-7);
  CHECK(rel_err((*x)[1], -2.0) <= 1e-5);  // objective pushes x1 to its bound
}

TEST_CASE("iteration caps raise a solver error distinct from infeasibility") {
  ConvexProblem p;
  p.n = 1;
  p.cost = Eigen::VectorXd::Ones(1);
  p.lb = Eigen::VectorXd::Zero(1);
  p.ub = Eigen::VectorXd::Ones(1);
  BarrierOptions opts;
  opts.max_outer = 1;
  opts.gap_tol = 1e-12;
  CHECK_THROWS_AS((void)minimize_convex(p, opts), SolverError);
}

TEST_CASE("a purely linear constraint has exactly zero analytic curvature") {
  SmoothFn fn;
  fn.lin = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, 0.7);
  CHECK(fn.eval_derivs(x, &g, &h) == doctest::Approx(2.1));
  CHECK(h.isZero(0.0));
}

TEST_CASE("the rate-denominator term family is convex") {
  // One term a0 * exp(a1*xp + y.x) / ln(1 + b0*exp(xp)) for each a1 used by
  // the cost model, probed over a box around realistic magnitudes.
  for (const double a1 : {0.0, 1.0}) {
    ConvexProblem p;
    p.n = 3;  // [x_p, omega~, rho~]
    p.cost = Eigen::VectorXd::Zero(3);
    p.lb.resize(3);
    p.ub.resize(3);
    p.lb << -20.0, 0.5, 5.0;
    p.ub << -1.0, 1.2, 14.0;
    SmoothIneq c;
    RateTerm t;
    t.a0 = 1.0;
    t.a1 = a1;
    t.p_index = 0;
    t.beta0 = 7.7e8;
    t.y = TermVec::Zero(3);
    t.y << 0.0, -1.0, -1.0;
    c.fn.rate_terms.push_back(t);
    c.rhs = kInf;
    p.ineqs.push_back(c);
    const auto rep = check_convexity(p, 100, 7);
    CAPTURE(a1);
    CHECK(rep.points_checked == 100);
    CHECK(rep.worst_ratio >= -1e-6);
  }
}

TEST_CASE("stage-1 constraint functions are convex and have exact gradients") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  std::mt19937_64 rng(5);
  int audited = 0;
  for (const auto& prob :
       {build_p3_problem(u, sys, 0.9), build_p4_problem(u, sys, 0.9),
        build_p_dk_problem(u, sys, 0.9, 2e6)}) {
    const auto rep = check_convexity(prob, 40, 11);
    CHECK(rep.worst_ratio >= -1e-6);
    for (const SmoothIneq& c : prob.ineqs) {
      for (int s = 0; s < 5; ++s) {
        // Keep the sample where the constraint value is moderate: central
        // differences cannot resolve small gradient components once the
        // function value's own rounding noise reaches their magnitude.
        Eigen::VectorXd x = interior_sample(prob, rng);
        for (int tries = 0; tries < 400 && std::abs(c.fn.eval(x)) > 1e3; ++tries)
          x = interior_sample(prob, rng);
        REQUIRE(std::abs(c.fn.eval(x)) <= 1e3);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(prob.n);
        c.fn.eval_derivs(x, &g, nullptr);
        const double err = finite_diff_check(
            [&](const Eigen::VectorXd& z) { return c.fn.eval(z); }, x, g);
        CHECK(err <= 1e-6);
        ++audited;
      }
    }
  }
  CHECK(audited >= 30);
}

TEST_CASE("solve_p3 and solve_p4 collapse to the box floor without bounds") {
  UserProfile u = default_user(400.0);
  u.t_max = kInf;
  const SystemConfig sys = default_config();
  const auto fog = solve_p3(u, sys, kInf);
  REQUIRE(fog.has_value());
  CHECK(fog->value <= kResourceFloor * 1.01);
  const auto cloud = solve_p4(u, sys, kInf);
  REQUIRE(cloud.has_value());
  CHECK(cloud->value <= kResourceFloor * 1.01);
}

TEST_CASE("an unattainable cost bound is reported as infeasible") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  CHECK(!solve_p3(u, sys, 1e-6).has_value());
  CHECK(!solve_p4(u, sys, 1e-6).has_value());
  CHECK(!solve_p_dk(u, sys, 1e-6, 1e6).has_value());
}

TEST_CASE("cloud latency alone can exhaust the delay budget") {
  const UserProfile u = default_user(400.0);
  SystemConfig sys = default_config();
  sys.t_cloud = 2.0;  // exceeds the 1 s deadline outright
  CHECK(!solve_p4(u, sys, 0.9).has_value());
}

TEST_CASE("offload-incapable users are rejected up front") {
  UserProfile u = default_user(400.0);
  u.rho_max = 0.0;
  const SystemConfig sys = default_config();
  CHECK(!solve_p3(u, sys, 0.9).has_value());
  CHECK(!solve_p4(u, sys, 0.9).has_value());
  CHECK_THROWS_AS((void)build_p3_problem(u, sys, 0.9), std::invalid_argument);
}

TEST_CASE("solve_p3 matches the grid oracle on the reference user") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  const auto got = solve_p3(u, sys, 0.9);
  REQUIRE(got.has_value());
  const auto ref = grid_min_helper(u, sys, 0.9, Mode::Fog);
  REQUIRE(ref.has_value());
  CHECK(rel_err(got->value, *ref) <= 0.02);
  CHECK(got->value <= *ref * (1.0 + 1e-6));  // grid demand is an upper bound
}

TEST_CASE("solve_p4 matches the grid oracle on the reference user") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  const auto got = solve_p4(u, sys, 0.9);
  REQUIRE(got.has_value());
  const auto ref = grid_min_helper(u, sys, 0.9, Mode::Cloud);
  REQUIRE(ref.has_value());
  CHECK(rel_err(got->value, *ref) <= 0.02);
  CHECK(got->value <= *ref * (1.0 + 1e-6));
}

TEST_CASE("solve_p_dk matches the grid oracle at an interior backhaul share") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  const auto cloud = solve_p4(u, sys, 0.9);
  REQUIRE(cloud.has_value());
  const double d = 0.5 * cloud->value;
  const auto got = solve_p_dk(u, sys, 0.9, d);
  REQUIRE(got.has_value());
  GridSpec spec;
  spec.points_omega = spec.points_f = spec.points_power = spec.points_rho = 32;
  const auto ref = grid_min_helper(u, sys, 0.9, Mode::CloudRecompressed, d, spec);
  REQUIRE(ref.has_value());
  CHECK(rel_err(*got, *ref) <= 0.02);
  CHECK(*got <= *ref * (1.0 + 1e-6));
}

TEST_CASE("required resources shrink monotonically as eta relaxes") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  double prev_f = kInf, prev_d = kInf;
  for (const double eta : {0.85, 1.0, 1.3}) {
    const auto fog = solve_p3(u, sys, eta);
    const auto cloud = solve_p4(u, sys, eta);
    REQUIRE(fog.has_value());
    REQUIRE(cloud.has_value());
    CHECK(fog->value <= prev_f * (1.0 + 1e-9));
    CHECK(cloud->value <= prev_d * (1.0 + 1e-9));
    prev_f = fog->value;
    prev_d = cloud->value;
  }
}

TEST_CASE("required fog resources shrink as the backhaul share grows") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  const auto cloud = solve_p4(u, sys, 0.9);
  REQUIRE(cloud.has_value());
  double prev = kInf;
  for (const double scale : {0.5, 0.75, 2.0}) {
    const auto r = solve_p_dk(u, sys, 0.9, scale * cloud->value);
    REQUIRE(r.has_value());
    CHECK(*r <= prev * (1.0 + 1e-9));
    prev = *r;
  }
}

TEST_CASE("stage-1 solutions validate against the cost model") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  const double eta = 0.9;

  const auto fog = solve_p3(u, sys, eta);
  REQUIRE(fog.has_value());
  const Decision fd = decision_from(*fog, Mode::Fog);
  CHECK(validate(fd, u, sys).feasible());
  CHECK(fog->xi1 <= eta * (1.0 + 1e-9));
  CHECK(fog->t1 <= u.t_max * (1.0 + 1e-9));
  CHECK(rel_err(fog->xi1, wedc(fd, u, sys)) <= 1e-12);
  CHECK(fog->t_user <= fog->t1 * (1.0 + 1e-12));

  const auto cloud = solve_p4(u, sys, eta);
  REQUIRE(cloud.has_value());
  const Decision cd = decision_from(*cloud, Mode::Cloud);
  CHECK(validate(cd, u, sys).feasible());
  CHECK(cloud->xi1 <= eta * (1.0 + 1e-9));
  CHECK(cloud->t1 <= u.t_max * (1.0 + 1e-9));
  // Cloud-side time is the user-side time plus transfer and platform delay.
  CHECK(cloud->t1 >= cloud->t_user + sys.t_cloud - 1e-12);
}

TEST_CASE("re-solving at a nudged bound reproduces the stage-1 solution") {
  const UserProfile u = default_user(400.0);
  const SystemConfig sys = default_config();
  const auto a = solve_p3(u, sys, 0.9);
  const auto b = solve_p3(u, sys, 0.9 * (1.0 + 1e-9));
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(rel_err(a->value, b->value) <= 1e-6);
  const auto again = solve_p3(u, sys, 0.9);
  REQUIRE(again.has_value());
  CHECK(a->value == again->value);  // determinism
}

TEST_CASE("recompression cost vanishes when the fog ratio is pinned trivially") {
  // With a free fog recompressor (zero cycle cost, ratio pinned) and a huge
  // backhaul share, the required fog CPU covers decompression plus an
  // (immaterial) forwarding wait only — the same workload a fog-serving user
  // with no offloadable compute would impose.
  UserProfile u = default_user(400.0);
  u.comp_fog = CompressionModel{ModelKind::Compress, 0.0, 0.0, 1.0, 0.0, 2.6, 2.6};
  SystemConfig sys = default_config();
  sys.t_cloud = 0.0;
  const double d_huge = 1e15;
  const auto got = solve_p_dk(u, sys, 0.9, d_huge);
  REQUIRE(got.has_value());

  UserProfile decomp_only = u;
  decomp_only.c_offloadable = 0.0;
  const auto ref = solve_p3(decomp_only, sys, 0.9);
  REQUIRE(ref.has_value());
  CHECK(rel_err(*got, ref->value) <= 1e-4);
}

TEST_CASE("degenerate ratio boxes are folded out of the problem") {
  UserProfile u = default_user(400.0);
  u.comp_user.omega_min = u.comp_user.omega_max = 2.6;
  u.quality_user.omega_min = u.quality_user.omega_max = 2.6;
  const SystemConfig sys = default_config();
  const ConvexProblem p = build_p3_problem(u, sys, 0.9);
  CHECK(p.n == 4);  // the ratio variable is eliminated
  const auto got = solve_p3(u, sys, 0.9);
  REQUIRE(got.has_value());
  CHECK(rel_err(std::exp(got->point.lw), 2.6) <= 1e-12);
  const Decision dec = decision_from(*got, Mode::Fog);
  CHECK(validate(dec, u, sys).feasible());
}
