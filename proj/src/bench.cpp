#include "cato/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "cato/model.hpp"
#include "cato/recompress.hpp"
#include "cato/solver.hpp"

namespace cato {

namespace {

// All tunable generation knobs with their defaults.
struct GenParams {
  double cell_radius_m = 800.0;
  double min_dist_m = 10.0;
  double t_max = 1.0;
  double f_max = 2.4e9;
  double p_max = 0.22;
  double p_circuit = 22e-9;
  double alpha = 1e-28;
  double b_in = 4e6;
  double rho_max = 1e6;
  double kappa = 50.0;
  double c_min = 1.8e9;
  double c_max = 2.4e9;
  double c_local_frac = 0.1;
  double w_t = 1.0 / 3.0;
  double omega_u_min = 2.3;
  double omega_u_max = 2.9;
  double omega_f_min = 3.4;
  double omega_f_max = 11.2;
  // Device compression cost curve, normalized so the power term is 0.03 at
  // ratio 2.6; decompression is nearly flat; fog recompression is the
  // gentler curve fitted over the wider fog ratio range.
  double comp_g1 = 0.03 * std::pow(2.6, -32.28);
  double comp_g2 = 32.28;
  double comp_g3 = 0.3;
  double decomp_g1 = 0.115;
  double decomp_g2 = -0.9179;
  double decomp_g3 = 0.046;
  double fogcomp_g1 = 0.076;
  double fogcomp_g2 = 0.7116;
  double fogcomp_g3 = 0.5794;
  double gamma0_fog_ratio = 1.0;  // fog workload scale / device workload scale
  double f_fog_max = 15e9;
  double d_max = 20e6;
  double t_cloud = 0.2;
  double m0 = 5.0;
  double sigma_bs = 3.18e-20;
  double q_min = -1.0;            // < 0 = no quality floor
  double zero_compression = 0.0;  // != 0: ratios pinned to 1, curves zeroed
  double fixed_omega = 0.0;       // > 0: ratio box collapsed to this value
};

struct Knob {
  const char* name;
  double GenParams::*field;
};

constexpr Knob kKnobs[] = {
    {"cell_radius_m", &GenParams::cell_radius_m},
    {"min_dist_m", &GenParams::min_dist_m},
    {"t_max", &GenParams::t_max},
    {"f_max", &GenParams::f_max},
    {"p_max", &GenParams::p_max},
    {"p_circuit", &GenParams::p_circuit},
    {"alpha", &GenParams::alpha},
    {"b_in", &GenParams::b_in},
    {"rho_max", &GenParams::rho_max},
    {"kappa", &GenParams::kappa},
    {"c_min", &GenParams::c_min},
    {"c_max", &GenParams::c_max},
    {"c_local_frac", &GenParams::c_local_frac},
    {"w_t", &GenParams::w_t},
    {"omega_u_min", &GenParams::omega_u_min},
    {"omega_u_max", &GenParams::omega_u_max},
    {"omega_f_min", &GenParams::omega_f_min},
    {"omega_f_max", &GenParams::omega_f_max},
    {"comp_g1", &GenParams::comp_g1},
    {"comp_g2", &GenParams::comp_g2},
    {"comp_g3", &GenParams::comp_g3},
    {"decomp_g1", &GenParams::decomp_g1},
    {"decomp_g2", &GenParams::decomp_g2},
    {"decomp_g3", &GenParams::decomp_g3},
    {"fogcomp_g1", &GenParams::fogcomp_g1},
    {"fogcomp_g2", &GenParams::fogcomp_g2},
    {"fogcomp_g3", &GenParams::fogcomp_g3},
    {"gamma0_fog_ratio", &GenParams::gamma0_fog_ratio},
    {"f_fog_max", &GenParams::f_fog_max},
    {"d_max", &GenParams::d_max},
    {"t_cloud", &GenParams::t_cloud},
    {"m0", &GenParams::m0},
    {"sigma_bs", &GenParams::sigma_bs},
    {"q_min", &GenParams::q_min},
    {"zero_compression", &GenParams::zero_compression},
    {"fixed_omega", &GenParams::fixed_omega},
};

// Uniform in [0,1) from the raw engine; avoids the implementation-defined
// std::uniform_real_distribution so instances are stable everywhere.
double next_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<std::string> known_override_keys() {
  std::vector<std::string> keys;
  for (const Knob& k : kKnobs) keys.push_back(k.name);
  return keys;
}

Instance generate_instance(std::uint64_t seed, int k, const Overrides& overrides) {
  if (k < 1) throw std::invalid_argument("generate_instance: k must be >= 1");
  GenParams gp;
  for (const auto& [key, val] : overrides) {
    bool found = false;
    for (const Knob& kn : kKnobs) {
      if (key == kn.name) {
        gp.*(kn.field) = val;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::invalid_argument("generate_instance: unknown override '" + key + "'");
  }

  Instance inst;
  inst.seed = seed;
  inst.config.f_fog_max = gp.f_fog_max;
  inst.config.d_max = gp.d_max;
  inst.config.t_cloud = gp.t_cloud;
  inst.config.m0 = gp.m0;
  inst.config.sigma_bs = gp.sigma_bs;

  const bool nocomp = gp.zero_compression != 0.0;
  double wu_lo = gp.omega_u_min, wu_hi = gp.omega_u_max;
  if (gp.fixed_omega > 0.0) wu_lo = wu_hi = gp.fixed_omega;
  if (nocomp) wu_lo = wu_hi = 1.0;

  std::mt19937_64 rng(seed);
  inst.users.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double u_pos = next_uniform(rng);
    const double u_task = next_uniform(rng);

    UserProfile u;
    const double r0 = gp.min_dist_m, r1 = gp.cell_radius_m;
    const double dist_m = std::sqrt(u_pos * (r1 * r1 - r0 * r0) + r0 * r0);
    const double pl_db = 128.1 + 37.6 * std::log10(dist_m / 1000.0);
    u.beta_lin = std::pow(10.0, -pl_db / 10.0);

    u.c_total = gp.c_min + u_task * (gp.c_max - gp.c_min);
    u.c_local = gp.c_local_frac * u.c_total;
    u.c_offloadable = u.c_total - u.c_local;
    u.b_in = gp.b_in;
    u.t_max = gp.t_max;
    u.f_max = gp.f_max;
    u.p_max = gp.p_max;
    u.p_circuit = gp.p_circuit;
    u.alpha = gp.alpha;
    u.w_t = gp.w_t;
    u.w_e = 1.0 - gp.w_t;
    u.rho_max = gp.rho_max;

    const double g0 = gp.kappa * gp.b_in;
    u.comp_user = {ModelKind::Compress, g0, nocomp ? 0.0 : gp.comp_g1,
                   gp.comp_g2, nocomp ? 0.0 : gp.comp_g3, wu_lo, wu_hi};
    u.decomp_user = {ModelKind::Decompress, g0, nocomp ? 0.0 : gp.decomp_g1,
                     gp.decomp_g2, nocomp ? 0.0 : gp.decomp_g3, wu_lo, wu_hi};
    u.quality_user = {ModelKind::Quality, 1.0, 0.0, 1.0, 1.0, wu_lo, wu_hi};
    u.comp_fog = {ModelKind::Compress, g0 * gp.gamma0_fog_ratio,
                  nocomp ? 0.0 : gp.fogcomp_g1, gp.fogcomp_g2,
                  nocomp ? 0.0 : gp.fogcomp_g3, gp.omega_f_min, gp.omega_f_max};
    if (nocomp) {
      u.comp_fog.omega_min = u.comp_fog.omega_max = 1.0;
    }
    if (gp.q_min >= 0.0) u.q_min = gp.q_min;
    inst.users.push_back(u);
  }
  return inst;
}

namespace {

// No-compression ablation: ratios pinned to 1 and compression work zeroed,
// leaving transmission of the raw payload as the only offloading cost.
Instance strip_compression(const Instance& in) {
  Instance out = in;
  for (UserProfile& u : out.users) {
    for (CompressionModel* m :
         {&u.comp_user, &u.decomp_user, &u.comp_fog}) {
      m->gamma1 = 0.0;
      m->gamma3 = 0.0;
      m->omega_min = m->omega_max = 1.0;
    }
    u.quality_user.omega_min = u.quality_user.omega_max = 1.0;
  }
  return out;
}

// Fixed-ratio ablation: the device ratio box collapses to w (the fog box is
// untouched, matching the generator's fixed_omega knob).
Instance pin_user_ratio(const Instance& in, double w) {
  Instance out = in;
  for (UserProfile& u : out.users) {
    u.comp_user.omega_min = u.comp_user.omega_max = w;
    u.decomp_user.omega_min = u.decomp_user.omega_max = w;
    u.quality_user.omega_min = u.quality_user.omega_max = w;
  }
  return out;
}

// Re-check every constraint of a finished solution; the first violated
// constraint is reported so a bad run fails loudly in the records.
std::string revalidate(const Instance& inst, const std::vector<Decision>& dec) {
  double fog = 0.0, bh = 0.0;
  for (const Decision& d : dec) {
    if (d.mode == Mode::Fog || d.mode == Mode::CloudRecompressed) fog += d.f_f;
    if (d.mode == Mode::Cloud || d.mode == Mode::CloudRecompressed) bh += d.d;
  }
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const Decision& d = dec[i];
    PeerTotals peers;
    peers.fog_hz = fog;
    peers.backhaul_bps = bh;
    if (d.mode == Mode::Fog || d.mode == Mode::CloudRecompressed)
      peers.fog_hz -= d.f_f;
    if (d.mode == Mode::Cloud || d.mode == Mode::CloudRecompressed)
      peers.backhaul_bps -= d.d;
    const ConstraintReport rep =
        validate(d, inst.users[i], inst.config, peers);
    if (!rep.feasible()) {
      const struct {
        const char* name;
        bool ok;
      } cs[] = {{"c1", rep.c1.ok}, {"c2", rep.c2.ok},   {"c3", rep.c3.ok},
                {"c4", rep.c4.ok}, {"c5", rep.c5.ok},   {"c6", rep.c6.ok},
                {"c7", rep.c7.ok}, {"c8", rep.c8.ok},   {"c9", rep.c9.ok},
                {"c10", rep.c10.ok}};
      for (const auto& c : cs)
        if (!c.ok)
          return "validation failed: user " + std::to_string(i) + " " + c.name;
      return "validation failed: user " + std::to_string(i);
    }
  }
  return "";
}

void fill_from_solution(RunRecord& r, const Instance& inst,
                        const Solution& sol) {
  r.eta = sol.eta_star;
  r.fog_hz = sol.fog_total;
  r.backhaul_bps = sol.backhaul_total;
  for (const Decision& d : sol.decisions) {
    switch (d.mode) {
      case Mode::Local: ++r.n_local; break;
      case Mode::Fog: ++r.n_fog; break;
      case Mode::Cloud: ++r.n_cloud; break;
      case Mode::CloudRecompressed: ++r.n_recomp; break;
    }
  }
  const std::string err = revalidate(inst, sol.decisions);
  if (!err.empty()) {
    r.ok = false;
    r.error = err;
  }
}

// Local-only reference: every user at their own best on-device operating
// point; the bound is the worst of those.
void run_local_only(RunRecord& r, const Instance& inst) {
  std::vector<Decision> dec(inst.users.size());
  double eta = 0.0;
  for (std::size_t i = 0; i < inst.users.size(); ++i) {
    const double e = eta_local(inst.users[i]);
    if (!std::isfinite(e)) {
      r.ok = false;
      r.eta = std::numeric_limits<double>::quiet_NaN();
      r.error = "user " + std::to_string(i) + " cannot meet its deadline on-device";
      return;
    }
    eta = std::max(eta, e);
    dec[i].mode = Mode::Local;
    dec[i].f_u = eta_local_rate(inst.users[i]);
  }
  r.eta = eta;
  r.n_local = static_cast<int>(inst.users.size());
  const std::string err = revalidate(inst, dec);
  if (!err.empty()) {
    r.ok = false;
    r.error = err;
  }
}

}  // namespace

RunRecord run_algo(const std::string& algo, const Instance& inst,
                   double epsilon, int segments, double lambda_step,
                   int iters) {
  RunRecord r;
  r.algo = algo;
  r.seed = inst.seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (algo == "local") {
      run_local_only(r, inst);
    } else if (algo == "nocomp") {
      const Instance mod = strip_compression(inst);
      fill_from_solution(r, mod, solve(mod, epsilon));
    } else if (algo == "jcora") {
      fill_from_solution(r, inst, solve(inst, epsilon));
    } else if (algo == "pla" || algo == "osts" || algo == "iuts") {
      fill_from_solution(
          r, inst, solve_ext(inst, epsilon, algo, segments, lambda_step, iters));
    } else if (algo.rfind("fixed:", 0) == 0) {
      const double w = std::stod(algo.substr(6));
      if (!(w >= 1.0)) throw std::invalid_argument("fixed ratio must be >= 1");
      const Instance mod = pin_user_ratio(inst, w);
      fill_from_solution(r, mod, solve(mod, epsilon));
    } else {
      throw std::invalid_argument("unknown algorithm '" + algo + "'");
    }
  } catch (const InfeasibleInstance& e) {
    r.ok = false;
    r.eta = std::numeric_limits<double>::quiet_NaN();
    r.error = std::string("infeasible: ") + e.what();
  } catch (const std::exception& e) {
    r.ok = false;
    r.eta = std::numeric_limits<double>::quiet_NaN();
    r.error = e.what();
  }
  r.ms = std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
             .count();
  return r;
}

std::vector<RunRecord> run_baselines(const Instance& inst, double epsilon) {
  std::vector<RunRecord> out;
  out.push_back(run_algo("local", inst, epsilon, 9, 5e-3, 500));
  out.push_back(run_algo("nocomp", inst, epsilon, 9, 5e-3, 500));
  out.push_back(run_algo("jcora", inst, epsilon, 9, 5e-3, 500));
  for (double w = 1.0; w <= 3.4 + 1e-9; w += 0.2) {
    char name[32];
    std::snprintf(name, sizeof name, "fixed:%.3g", w);
    RunRecord r = run_algo(name, inst, epsilon, 9, 5e-3, 500);
    r.param = w;
    out.push_back(r);
  }
  return out;
}

namespace {

std::string trim_copy(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim_copy(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_num(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("sweep: bad number '" + s + "' for " + what);
  }
}

// Seeds accept either a comma list or an inclusive "lo..hi" range.
std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = std::stoull(trim_copy(s.substr(0, dots)));
    const std::uint64_t hi = std::stoull(trim_copy(s.substr(dots + 2)));
    if (hi < lo) throw std::invalid_argument("sweep: seed range is reversed");
    if (hi - lo > 100000) throw std::invalid_argument("sweep: seed range too large");
    for (std::uint64_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  for (const std::string& item : split_list(s))
    out.push_back(std::stoull(item));
  return out;
}

std::string fmt10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

SweepSpec parse_sweep_spec(std::istream& in) {
  SweepSpec spec;
  bool saw_format = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim_copy(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("sweep: line " + std::to_string(lineno) +
                                  " is not 'key = value'");
    const std::string key = trim_copy(line.substr(0, eq));
    const std::string val = trim_copy(line.substr(eq + 1));
    if (key == "format") {
      if (val != "1")
        throw std::invalid_argument("sweep: unsupported format (want 1)");
      saw_format = true;
    } else if (key == "param") {
      spec.param = val;
    } else if (key == "values") {
      spec.values.clear();
      for (const std::string& item : split_list(val))
        spec.values.push_back(parse_num(item, "values"));
    } else if (key == "seeds") {
      spec.seeds = parse_seeds(val);
    } else if (key == "k") {
      spec.k = static_cast<int>(parse_num(val, "k"));
    } else if (key == "algos") {
      spec.algos = split_list(val);
    } else if (key == "epsilon") {
      spec.epsilon = parse_num(val, "epsilon");
    } else if (key == "segments") {
      spec.segments = static_cast<int>(parse_num(val, "segments"));
    } else if (key == "lambda_step") {
      spec.lambda_step = parse_num(val, "lambda_step");
    } else if (key == "iters") {
      spec.iters = static_cast<int>(parse_num(val, "iters"));
    } else if (key.rfind("set.", 0) == 0) {
      spec.overrides[key.substr(4)] = parse_num(val, key);
    } else {
      throw std::invalid_argument("sweep: unknown key '" + key + "'");
    }
  }
  if (!saw_format) throw std::invalid_argument("sweep: missing 'format = 1'");
  if (spec.seeds.empty()) throw std::invalid_argument("sweep: no seeds listed");
  if (spec.algos.empty()) throw std::invalid_argument("sweep: no algos listed");
  if (spec.k < 1) throw std::invalid_argument("sweep: k must be >= 1");
  if (!spec.param.empty()) {
    const auto keys = known_override_keys();
    if (std::find(keys.begin(), keys.end(), spec.param) == keys.end())
      throw std::invalid_argument("sweep: unknown swept parameter '" +
                                  spec.param + "'");
    if (spec.values.empty())
      throw std::invalid_argument("sweep: param set but no values listed");
  }
  if (spec.values.empty()) spec.values.push_back(0.0);
  return spec;
}

SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep spec: " + path);
  return parse_sweep_spec(in);
}

void write_csv(std::ostream& out, const std::vector<RunRecord>& rows) {
  // Wall time is masked in file output so repeated runs are byte-identical;
  // the in-memory records keep the measurement.
  out << "algo,seed,param,eta,n_local,n_fog,n_cloud,n_recomp,fog_hz,"
         "backhaul_bps,ms\n";
  for (const RunRecord& r : rows) {
    out << r.algo << ',' << r.seed << ',' << fmt10(r.param) << ','
        << fmt10(r.eta) << ',' << r.n_local << ',' << r.n_fog << ','
        << r.n_cloud << ',' << r.n_recomp << ',' << fmt10(r.fog_hz) << ','
        << fmt10(r.backhaul_bps) << ",0\n";
  }
}

std::vector<RunRecord> sweep(const SweepSpec& spec, const std::string& out_dir) {
  struct Cell {
    double value;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double v : spec.values)
    for (std::uint64_t s : spec.seeds) cells.push_back({v, s});

  // One task per (value, seed): generate the instance once, run every
  // algorithm on it. Rows are gathered and sorted afterwards, so scheduling
  // order cannot leak into the output.
  auto run_cell = [&](const Cell& c) {
    std::vector<RunRecord> rows;
    Overrides ov = spec.overrides;
    if (!spec.param.empty()) ov[spec.param] = c.value;
    try {
      const Instance inst = generate_instance(c.seed, spec.k, ov);
      for (const std::string& algo : spec.algos) {
        RunRecord r = run_algo(algo, inst, spec.epsilon, spec.segments,
                               spec.lambda_step, spec.iters);
        r.param = c.value;
        rows.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      for (const std::string& algo : spec.algos) {
        RunRecord r;
        r.algo = algo;
        r.seed = c.seed;
        r.param = c.value;
        r.eta = std::numeric_limits<double>::quiet_NaN();
        r.ok = false;
        r.error = e.what();
        rows.push_back(std::move(r));
      }
    }
    return rows;
  };

  const std::size_t workers = std::min<std::size_t>(
      cells.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<RunRecord> all;
  std::atomic<std::size_t> next{0};
  std::vector<std::vector<RunRecord>> per_cell(cells.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < cells.size();
           i = next.fetch_add(1))
        per_cell[i] = run_cell(cells[i]);
    });
  }
  for (std::thread& t : pool) t.join();
  for (std::vector<RunRecord>& rows : per_cell)
    for (RunRecord& r : rows) all.push_back(std::move(r));

  std::sort(all.begin(), all.end(), [](const RunRecord& a, const RunRecord& b) {
    if (a.algo != b.algo) return a.algo < b.algo;
    if (a.param != b.param) return a.param < b.param;
    return a.seed < b.seed;
  });

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "results.csv");
    if (!out) throw std::runtime_error("cannot write results.csv in " + out_dir);
    write_csv(out, all);
  }
  {
    std::ofstream out(fs::path(out_dir) / "aggregate.csv");
    if (!out) throw std::runtime_error("cannot write aggregate.csv in " + out_dir);
    out << "algo,param,n_ok,n_fail,eta_mean,fog_hz_mean,backhaul_bps_mean\n";
    std::size_t i = 0;
    while (i < all.size()) {
      std::size_t j = i;
      int n_ok = 0, n_fail = 0;
      double eta = 0.0, fog = 0.0, bh = 0.0;
      while (j < all.size() && all[j].algo == all[i].algo &&
             all[j].param == all[i].param) {
        if (all[j].ok) {
          ++n_ok;
          eta += all[j].eta;
          fog += all[j].fog_hz;
          bh += all[j].backhaul_bps;
        } else {
          ++n_fail;
        }
        ++j;
      }
      const double n = std::max(1, n_ok);
      out << all[i].algo << ',' << fmt10(all[i].param) << ',' << n_ok << ','
          << n_fail << ',' << fmt10(n_ok ? eta / n : std::numeric_limits<double>::quiet_NaN())
          << ',' << fmt10(fog / n) << ',' << fmt10(bh / n) << '\n';
      i = j;
    }
  }
  return all;
}


}  // namespace cato
