// Instance file round-trip: plain "key = value" text, one scalar per line,
// versioned with a leading format tag. Doubles are written with 17
// significant digits so save/load is exact; parsing is strict (unknown or
// missing keys are errors) to keep the format honest across versions.
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cato/bench.hpp"

namespace cato {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Compress: return "compress";
    case ModelKind::Decompress: return "decompress";
    case ModelKind::Quality: return "quality";
  }
  return "?";
}

ModelKind kind_from(const std::string& s) {
  if (s == "compress") return ModelKind::Compress;
  if (s == "decompress") return ModelKind::Decompress;
  if (s == "quality") return ModelKind::Quality;
  throw std::invalid_argument("instance: unknown curve kind '" + s + "'");
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Ordered key/value store with consumption tracking so leftovers (typos,
// fields from some future format) are reported instead of ignored.
class KvReader {
public:
  explicit KvReader(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("instance: line " + std::to_string(lineno) +
                                    " is not 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string val = trim(line.substr(eq + 1));
      if (key.empty())
        throw std::invalid_argument("instance: empty key on line " +
                                    std::to_string(lineno));
      if (!kv_.emplace(key, val).second)
        throw std::invalid_argument("instance: duplicate key '" + key + "'");
    }
  }

  std::string str(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end())
      throw std::invalid_argument("instance: missing key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  double num(const std::string& key) {
    const std::string s = str(key);
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("trailing junk");
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("instance: key '" + key +
                                  "' has non-numeric value '" + s + "'");
    }
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  void finish() const {
    for (const auto& [key, val] : kv_)
      if (!used_.count(key))
        throw std::invalid_argument("instance: unknown key '" + key + "'");
  }

private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
};

CompressionModel parse_model(const std::string& text, const std::string& key) {
  std::istringstream is(text);
  std::string kind;
  CompressionModel m;
  if (!(is >> kind >> m.gamma0 >> m.gamma1 >> m.gamma2 >> m.gamma3 >>
        m.omega_min >> m.omega_max))
    throw std::invalid_argument("instance: key '" + key +
                                "' needs 'kind g0 g1 g2 g3 omega_min omega_max'");
  std::string extra;
  if (is >> extra)
    throw std::invalid_argument("instance: trailing tokens in '" + key + "'");
  m.kind = kind_from(kind);
  return m;
}

void write_model(std::ostream& out, const std::string& key,
                 const CompressionModel& m) {
  out << key << " = " << kind_name(m.kind) << ' ' << fmt(m.gamma0) << ' '
      << fmt(m.gamma1) << ' ' << fmt(m.gamma2) << ' ' << fmt(m.gamma3) << ' '
      << fmt(m.omega_min) << ' ' << fmt(m.omega_max) << '\n';
}

}  // namespace

Instance parse_instance(std::istream& in) {
  KvReader kv(in);
  if (kv.str("format") != "1")
    throw std::invalid_argument("instance: unsupported format (want 1)");

  Instance inst;
  inst.seed = static_cast<std::uint64_t>(std::stoull(kv.str("seed")));
  const double kd = kv.num("k");
  const int k = static_cast<int>(kd);
  if (k < 1 || kd != k) throw std::invalid_argument("instance: k must be a positive integer");

  inst.config.f_fog_max = kv.num("f_fog_max");
  inst.config.d_max = kv.num("d_max");
  inst.config.t_cloud = kv.num("t_cloud");
  inst.config.m0 = kv.num("m0");
  inst.config.sigma_bs = kv.num("sigma_bs");
  inst.config.w_bw = kv.num("w_bw");
  inst.config.w_c = kv.num("w_c");

  inst.users.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const std::string p = "user." + std::to_string(i) + ".";
    UserProfile& u = inst.users[static_cast<std::size_t>(i)];
    u.c_total = kv.num(p + "c_total");
    u.c_local = kv.num(p + "c_local");
    u.c_offloadable = kv.num(p + "c_offloadable");
    u.b_in = kv.num(p + "b_in");
    u.t_max = kv.num(p + "t_max");
    u.f_max = kv.num(p + "f_max");
    u.p_max = kv.num(p + "p_max");
    u.p_circuit = kv.num(p + "p_circuit");
    u.alpha = kv.num(p + "alpha");
    u.beta_lin = kv.num(p + "beta_lin");
    u.w_t = kv.num(p + "w_t");
    u.w_e = kv.num(p + "w_e");
    u.rho_max = kv.num(p + "rho_max");
    if (kv.has(p + "q_min")) u.q_min = kv.num(p + "q_min");
    u.comp_user = parse_model(kv.str(p + "comp_user"), p + "comp_user");
    u.decomp_user = parse_model(kv.str(p + "decomp_user"), p + "decomp_user");
    u.quality_user = parse_model(kv.str(p + "quality_user"), p + "quality_user");
    u.comp_fog = parse_model(kv.str(p + "comp_fog"), p + "comp_fog");
  }
  kv.finish();
  return inst;
}

void write_instance(std::ostream& out, const Instance& inst) {
  out << "format = 1\n";
  out << "seed = " << inst.seed << '\n';
  out << "k = " << inst.users.size() << '\n';
  out << "\n# shared resources\n";
  out << "f_fog_max = " << fmt(inst.config.f_fog_max) << '\n';
  out << "d_max = " << fmt(inst.config.d_max) << '\n';
  out << "t_cloud = " << fmt(inst.config.t_cloud) << '\n';
  out << "m0 = " << fmt(inst.config.m0) << '\n';
  out << "sigma_bs = " << fmt(inst.config.sigma_bs) << '\n';
  out << "w_bw = " << fmt(inst.config.w_bw) << '\n';
  out << "w_c = " << fmt(inst.config.w_c) << '\n';
  for (std::size_t i = 0; i < inst.users.size(); ++i) {
    const UserProfile& u = inst.users[i];
    const std::string p = "user." + std::to_string(i) + ".";
    out << "\n# user " << i << '\n';
    out << p << "c_total = " << fmt(u.c_total) << '\n';
    out << p << "c_local = " << fmt(u.c_local) << '\n';
    out << p << "c_offloadable = " << fmt(u.c_offloadable) << '\n';
    out << p << "b_in = " << fmt(u.b_in) << '\n';
    out << p << "t_max = " << fmt(u.t_max) << '\n';
    out << p << "f_max = " << fmt(u.f_max) << '\n';
    out << p << "p_max = " << fmt(u.p_max) << '\n';
    out << p << "p_circuit = " << fmt(u.p_circuit) << '\n';
    out << p << "alpha = " << fmt(u.alpha) << '\n';
    out << p << "beta_lin = " << fmt(u.beta_lin) << '\n';
    out << p << "w_t = " << fmt(u.w_t) << '\n';
    out << p << "w_e = " << fmt(u.w_e) << '\n';
    out << p << "rho_max = " << fmt(u.rho_max) << '\n';
    if (u.q_min) out << p << "q_min = " << fmt(*u.q_min) << '\n';
    write_model(out, p + "comp_user", u.comp_user);
    write_model(out, p + "decomp_user", u.decomp_user);
    write_model(out, p + "quality_user", u.quality_user);
    write_model(out, p + "comp_fog", u.comp_fog);
  }
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  return parse_instance(in);
}

void save_instance(const std::string& path, const Instance& inst) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write instance file: " + path);
  write_instance(out, inst);
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace cato
