// Command-line surface:
//   fit <samples>                 fit compression-cost models to (omega, y) data
//   solve <instance>              min-max solve over local/fog/cloud routes
//   solve-ext <instance> --algo   adds the fog-recompression route
//   oracle <instance>             brute-force grid reference (K <= 3)
//   gen --seed S --k K            write a reproducible scenario file
//   sweep <spec> --out DIR        parameter sweep to CSV
// Exit codes: 0 success, 1 infeasible, 2 error.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cato/bench.hpp"
#include "cato/fit.hpp"
#include "cato/model.hpp"
#include "cato/oracle.hpp"
#include "cato/recompress.hpp"
#include "cato/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitError = 2;

void print_solution(const cato::Instance& inst, const cato::Solution& sol) {
  std::printf("eta_star = %.10g\n", sol.eta_star);
  std::printf("iterations = %d\n", sol.iterations);
  std::printf("fog_hz = %.10g\n", sol.fog_total);
  std::printf("backhaul_bps = %.10g\n", sol.backhaul_total);
  for (std::size_t i = 0; i < sol.decisions.size(); ++i) {
    const cato::Decision& d = sol.decisions[i];
    const double cost = cato::wedc(d, inst.users[i], inst.config);
    std::printf(
        "user %zu: mode=%s omega_u=%.6g omega_f=%.6g f_u=%.6g f_f=%.6g "
        "p=%.6g rho=%.6g d=%.6g cost=%.10g\n",
        i, cato::mode_name(d.mode), d.omega_u, d.omega_f, d.f_u, d.f_f, d.p,
        d.rho, d.d, cost);
  }
}

cato::Overrides parse_overrides(const std::vector<std::string>& kvs) {
  cato::Overrides ov;
  for (const std::string& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set needs key=value, got '" + kv + "'");
    ov[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return ov;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint compression / offloading / resource-allocation solver"};
  app.require_subcommand(1);

  // fit
  std::string fit_path;
  auto* fit_cmd = app.add_subcommand(
      "fit", "Fit power-law, linear and exponential cost models to samples");
  fit_cmd->add_option("samples", fit_path, "whitespace 'omega y' sample file")
      ->required();

  // solve / solve-ext / oracle share the instance argument
  std::string inst_path;
  double epsilon = 1e-3;
  auto* solve_cmd =
      app.add_subcommand("solve", "Min-max solve (local/fog/cloud routes)");
  solve_cmd->add_option("instance", inst_path, "instance file")->required();
  solve_cmd->add_option("--epsilon", epsilon, "bisection tolerance");

  std::string algo = "pla";
  int segments = 9;
  double lambda_step = 5e-3;
  int iters = 500;
  auto* ext_cmd = app.add_subcommand(
      "solve-ext", "Min-max solve with the fog-recompression route");
  ext_cmd->add_option("instance", inst_path, "instance file")->required();
  ext_cmd->add_option("--algo", algo, "pla, osts or iuts")
      ->check(CLI::IsMember({"pla", "osts", "iuts"}))
      ->required();
  ext_cmd->add_option("--epsilon", epsilon, "bisection tolerance");
  ext_cmd->add_option("--segments", segments, "chord count (pla)");
  ext_cmd->add_option("--lambda-step", lambda_step, "price step (osts)");
  ext_cmd->add_option("--iters", iters, "iteration cap (iuts)");

  int grid = 60;
  auto* oracle_cmd =
      app.add_subcommand("oracle", "Brute-force grid reference (K <= 3)");
  oracle_cmd->add_option("instance", inst_path, "instance file")->required();
  oracle_cmd->add_option("--grid", grid, "points per axis");

  // gen
  std::uint64_t seed = 1;
  int k = 10;
  std::vector<std::string> sets;
  std::string out_path;
  auto* gen_cmd =
      app.add_subcommand("gen", "Generate a reproducible scenario file");
  gen_cmd->add_option("--seed", seed, "RNG seed")->required();
  gen_cmd->add_option("--k", k, "number of users")->required();
  gen_cmd->add_option("--set", sets, "override, key=value (repeatable)");
  gen_cmd->add_option("-o,--out", out_path, "output file (default stdout)");

  // sweep
  std::string sweep_path, sweep_out;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Run a parameter sweep, write CSV files");
  sweep_cmd->add_option("spec", sweep_path, "sweep spec file")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitError;
  }

  try {
    if (*fit_cmd) {
      const auto samples = cato::load_samples(fit_path);
      const cato::FitReport rep = cato::fit_comparison_models(samples);
      std::printf("samples = %zu\n", samples.size());
      std::printf("power: g1=%.10g g2=%.10g g3=%.10g rmse=%.10g\n",
                  rep.power.gamma1, rep.power.gamma2, rep.power.gamma3,
                  rep.power_rmse);
      std::printf("linear: b1=%.10g b2=%.10g rmse=%.10g\n", rep.lin_b1,
                  rep.lin_b2, rep.linear_rmse);
      std::printf("exponential: e1=%.10g e2=%.10g rmse=%.10g\n", rep.exp_e1,
                  rep.exp_e2, rep.exp_rmse);
      return kExitOk;
    }
    if (*solve_cmd) {
      const cato::Instance inst = cato::load_instance(inst_path);
      print_solution(inst, cato::solve(inst, epsilon));
      return kExitOk;
    }
    if (*ext_cmd) {
      const cato::Instance inst = cato::load_instance(inst_path);
      print_solution(inst, cato::solve_ext(inst, epsilon, algo, segments,
                                           lambda_step, iters));
      return kExitOk;
    }
    if (*oracle_cmd) {
      const cato::Instance inst = cato::load_instance(inst_path);
      if (inst.users.size() > 3)
        throw std::invalid_argument("oracle supports at most 3 users");
      cato::GridSpec gs;
      gs.points_omega = gs.points_f = gs.points_power = gs.points_rho = grid;
      const cato::GridSolveResult res = cato::grid_solve(inst, gs);
      if (!std::isfinite(res.eta)) {
        std::fprintf(stderr, "infeasible: no grid point meets every constraint\n");
        return kExitInfeasible;
      }
      std::printf("eta_grid = %.10g\n", res.eta);
      for (std::size_t i = 0; i < res.decisions.size(); ++i)
        std::printf("user %zu: mode=%s\n", i,
                    cato::mode_name(res.decisions[i].mode));
      return kExitOk;
    }
    if (*gen_cmd) {
      const cato::Instance inst =
          cato::generate_instance(seed, k, parse_overrides(sets));
      if (out_path.empty()) {
        cato::write_instance(std::cout, inst);
      } else {
        cato::save_instance(out_path, inst);
        std::printf("wrote %s (k=%d, seed=%llu)\n", out_path.c_str(), k,
                    static_cast<unsigned long long>(seed));
      }
      return kExitOk;
    }
    if (*sweep_cmd) {
      const cato::SweepSpec spec = cato::load_sweep_spec(sweep_path);
      const auto rows = cato::sweep(spec, sweep_out);
      int failed = 0;
      for (const auto& r : rows)
        if (!r.ok) {
          ++failed;
          std::fprintf(stderr, "row failed: algo=%s seed=%llu param=%g: %s\n",
                       r.algo.c_str(),
                       static_cast<unsigned long long>(r.seed), r.param,
                       r.error.c_str());
        }
      std::printf("rows = %zu, failed = %d, out = %s\n", rows.size(), failed,
                  sweep_out.c_str());
      return kExitOk;
    }
  } catch (const cato::InfeasibleInstance& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
