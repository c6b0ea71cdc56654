// Scenario generation, baseline runs and parameter sweeps. The generator
// reproduces the reference simulation setting: users dropped uniformly in a
// cell, path-loss channel gains, per-user task sizes, shared fog/backhaul.
#ifndef CATO_BENCH_HPP
#define CATO_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "cato/types.hpp"

namespace cato {

using Overrides = std::map<std::string, double>;

// Deterministic scenario from a seed: k users uniform in an annulus
// [min_dist, cell_radius], log-distance path loss, task sizes uniform in
// [c_min, c_max], every other parameter at its default unless overridden.
// Unknown override keys are a config error.
Instance generate_instance(std::uint64_t seed, int k,
                           const Overrides& overrides = {});

// The set of override keys generate_instance accepts (for CLI diagnostics).
std::vector<std::string> known_override_keys();

struct RunRecord {
  std::string algo;
  std::uint64_t seed = 0;
  double param = 0.0;       // swept parameter value (0 when not sweeping)
  double eta = 0.0;         // min-max cost reached ( NaN when the run failed)
  int n_local = 0;
  int n_fog = 0;
  int n_cloud = 0;
  int n_recomp = 0;
  double fog_hz = 0.0;
  double backhaul_bps = 0.0;
  double ms = 0.0;          // wall time
  bool ok = true;
  std::string error;
};

// Local-only, no-compression and compression-enabled solves plus a fixed-
// ratio sweep on one instance.
std::vector<RunRecord> run_baselines(const Instance& inst, double epsilon = 1e-3);

// Sweep specification parsed from a key-value text file (see README):
// one named parameter over listed values x seeds x algorithms.
struct SweepSpec {
  std::string param;                // override key being swept ("" = none)
  std::vector<double> values;       // one run per value (or a single 0)
  std::vector<std::uint64_t> seeds;
  int k = 10;
  std::vector<std::string> algos;   // local,nocomp,jcora,pla,osts,iuts,fixed:<w>
  Overrides overrides;              // applied to every instance
  double epsilon = 1e-3;
  int segments = 9;                 // PLA
  double lambda_step = 5e-3;        // OSTS
  int iters = 500;                  // IUTS
};

SweepSpec parse_sweep_spec(std::istream& in);
SweepSpec load_sweep_spec(const std::string& path);

// Run the sweep; writes results.csv and aggregate.csv under out_dir and also
// returns the per-run records. Per-row failures are recorded, not fatal.
std::vector<RunRecord> sweep(const SweepSpec& spec, const std::string& out_dir);

// Run one algorithm by name on an instance (the sweep/CLI entry point).
RunRecord run_algo(const std::string& algo, const Instance& inst,
                   double epsilon, int segments, double lambda_step, int iters);

// Instance file round-trip (plain "key = value" text, format=1).
Instance parse_instance(std::istream& in);
Instance load_instance(const std::string& path);
void write_instance(std::ostream& out, const Instance& inst);
void save_instance(const std::string& path, const Instance& inst);

void write_csv(std::ostream& out, const std::vector<RunRecord>& rows);

}  // namespace cato

#endif
