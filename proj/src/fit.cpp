#include "cato/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cato {
namespace {

constexpr double kExpGuard = 600.0;  // keep exp() arguments finite
constexpr int kMaxIter = 500;
constexpr double kParamTol = 1e-10;

struct Profiled {
  double a = 0.0;  // coefficient on the scaled basis
  double c = 0.0;  // constant term
  double rmse = std::numeric_limits<double>::infinity();
};

double rmse_of(const Eigen::VectorXd& resid) {
  return std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
}

// Least squares for y ~ a*t + c with a, c >= 0.
void nnls2(const Eigen::VectorXd& t, const Eigen::VectorXd& y, double& a, double& c) {
  const double n = static_cast<double>(t.size());
  const double st = t.sum(), stt = t.squaredNorm();
  const double sy = y.sum(), sty = t.dot(y);
  const double det = n * stt - st * st;
  if (det > 1e-30 * std::max(1.0, n * stt)) {
    a = (n * sty - st * sy) / det;
    c = (stt * sy - st * sty) / det;
    if (a >= 0.0 && c >= 0.0) return;
  }
  // Boundary candidates.
  const double c_only = std::max(0.0, sy / n);
  const double a_only = stt > 0.0 ? std::max(0.0, sty / stt) : 0.0;
  const double r_c = (y.array() - c_only).matrix().squaredNorm();
  const double r_a = (y - a_only * t).squaredNorm();
  if (r_a < r_c) {
    a = a_only;
    c = 0.0;
  } else {
    a = 0.0;
    c = c_only;
  }
}

// Profiled residual of y ~ a*exp(g*logx) + c at a fixed exponent g, where
// logx[i] = ln(x[i]/x_max) <= 0 keeps the basis in (0, 1] for g >= 0.
Profiled profile_power(double g, const Eigen::VectorXd& logx, const Eigen::VectorXd& y) {
  Profiled out;
  if ((g * logx.array()).abs().maxCoeff() > kExpGuard) return out;
  const Eigen::VectorXd t = (g * logx.array()).exp();
  nnls2(t, y, out.a, out.c);
  out.rmse = rmse_of(out.a * t + Eigen::VectorXd::Constant(y.size(), out.c) - y);
  return out;
}

// Golden-section refinement of a scalar function on [lo, hi].
template <class F>
double golden_min(F f, double lo, double hi) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi));
       ++it) {
    if (f1 <= f2) {  // keep the left interval on ties: smaller exponent wins
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

std::vector<FitSample> sorted_copy(std::vector<FitSample> samples) {
  std::sort(samples.begin(), samples.end(), [](const FitSample& l, const FitSample& r) {
    return l.omega != r.omega ? l.omega < r.omega : l.y < r.y;
  });
  return samples;
}

void check_samples(const std::vector<FitSample>& s) {
  if (s.size() < 4) throw std::invalid_argument("fit: need at least 4 samples");
  double lo = s.front().omega, hi = s.front().omega;
  int distinct = 1;
  double last = s.front().omega;
  for (const FitSample& p : s) {
    if (!(p.omega > 0.0) || !std::isfinite(p.y))
      throw std::invalid_argument("fit: samples must have positive omega and finite y");
    lo = std::min(lo, p.omega);
    hi = std::max(hi, p.omega);
    if (p.omega != last) {
      ++distinct;
      last = p.omega;
    }
  }
  (void)lo;
  (void)hi;
  if (distinct < 3) throw std::invalid_argument("fit: need at least 3 distinct omega values");
}

}  // namespace

double rmse(const CompressionModel& model, const std::vector<FitSample>& samples) {
  if (samples.empty()) throw std::invalid_argument("rmse: empty sample set");
  double acc = 0.0;
  for (const FitSample& s : samples) {
    const double base = model.gamma1 * std::pow(s.omega, model.gamma2) + model.gamma3;
    const double pred =
        model.gamma0 * (model.kind == ModelKind::Quality
                            ? model.gamma3 - model.gamma1 * std::pow(s.omega, model.gamma2)
                            : base);
    const double r = pred - s.y;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

CompressionModel fit_power_law(const std::vector<FitSample>& raw) {
  check_samples(raw);
  const std::vector<FitSample> samples = sorted_copy(raw);
  const int n = static_cast<int>(samples.size());
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = samples[i].omega;
    y[i] = samples[i].y;
  }
  const double x_max = x.maxCoeff();
  const Eigen::VectorXd logx = (x.array() / x_max).log();

  CompressionModel out;
  out.kind = ModelKind::Compress;
  out.gamma0 = 1.0;
  out.omega_min = x.minCoeff();
  out.omega_max = x_max;

  // Flat data: no exponent is identifiable, return the mean with g2 = 1.
  const double spread = y.maxCoeff() - y.minCoeff();
  if (spread <= 1e-14 * std::max(1.0, y.cwiseAbs().maxCoeff())) {
    out.gamma1 = 0.0;
    out.gamma2 = 1.0;
    out.gamma3 = y.mean();
    return out;
  }

  auto value = [&](double g) { return profile_power(g, logx, y).rmse; };

  // Multistart over the exponent, expanded outward while the edge keeps
  // winning (fitted exponents in practice range from below -1 to above 100).
  std::vector<double> grid = {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0};
  std::size_t best_i = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = value(grid[i]);
    if (v < best_v * (1.0 - 1e-12)) {
      best_v = v;
      best_i = i;
    }
  }
  while (best_i + 1 == grid.size() && std::abs(grid.back()) < 1e4) {
    grid.push_back(grid.back() * 2.0);
    const double v = value(grid.back());
    if (v < best_v * (1.0 - 1e-12)) {
      best_v = v;
      best_i = grid.size() - 1;
    } else {
      break;
    }
  }
  while (best_i == 0 && std::abs(grid.front()) < 1e4) {
    grid.insert(grid.begin(), grid.front() * 2.0);
    best_i = 1;
    const double v = value(grid.front());
    if (v < best_v * (1.0 - 1e-12)) {
      best_v = v;
      best_i = 0;
    } else {
      break;
    }
  }
  const double lo = best_i > 0 ? grid[best_i - 1] : grid[best_i] - 1.0;
  const double hi = best_i + 1 < grid.size() ? grid[best_i + 1] : grid[best_i] + 1.0;
  double g = golden_min(value, lo, hi);
  Profiled prof = profile_power(g, logx, y);

  // Joint damped least-squares polish on (a, g, c).
  double a = prof.a, c = prof.c;
  double lambda = 1e-3;
  double cur = prof.rmse;
  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::VectorXd t = (g * logx.array()).exp();
    const Eigen::VectorXd r = a * t + Eigen::VectorXd::Constant(n, c) - y;
    Eigen::MatrixXd J(n, 3);
    J.col(0) = t;
    J.col(1) = a * t.cwiseProduct(logx);
    J.col(2) = Eigen::VectorXd::Ones(n);
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    const Eigen::Vector3d Jtr = J.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix3d H = JtJ;
      H.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::Vector3d step = H.ldlt().solve(-Jtr);
      const double na = std::max(0.0, a + step[0]);
      const double ng = g + step[1];
      const double nc = std::max(0.0, c + step[2]);
      if ((ng * logx.array()).abs().maxCoeff() > kExpGuard) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd nt = (ng * logx.array()).exp();
      const double nv = rmse_of(na * nt + Eigen::VectorXd::Constant(n, nc) - y);
      if (nv <= cur) {
        const double rel = std::abs(na - a) / std::max(1.0, std::abs(a)) +
                           std::abs(ng - g) / std::max(1.0, std::abs(g)) +
                           std::abs(nc - c) / std::max(1.0, std::abs(c));
        const bool done = rel < kParamTol || cur - nv < 1e-16 * (1.0 + cur);
        a = na;
        g = ng;
        c = nc;
        cur = nv;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (done) it = kMaxIter;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  // Re-profile at the polished exponent in case clamping stalled the step.
  prof = profile_power(g, logx, y);
  if (prof.rmse < cur) {
    a = prof.a;
    c = prof.c;
  }

  out.gamma1 = a * std::exp(-g * std::log(x_max));
  out.gamma2 = g;
  out.gamma3 = c;
  if (out.gamma1 == 0.0) {
    out.gamma2 = 1.0;
    out.gamma3 = y.mean();
  }
  return out;
}

namespace {

// Exponential family y ~ e1p * (exp(e2*(x-1)) - 1) with e1 = e1p * exp(-e2).
Profiled profile_exp(double e2, const Eigen::VectorXd& xm1, const Eigen::VectorXd& y) {
  Profiled out;
  if (std::abs(e2) > kExpGuard || (e2 * xm1.array()).abs().maxCoeff() > kExpGuard) return out;
  const Eigen::VectorXd v = (e2 * xm1.array()).exp() - 1.0;
  const double svv = v.squaredNorm();
  if (svv < 1e-300) return out;
  out.a = v.dot(y) / svv;
  out.rmse = rmse_of(out.a * v - y);
  return out;
}

}  // namespace

FitReport fit_comparison_models(const std::vector<FitSample>& raw) {
  check_samples(raw);
  const std::vector<FitSample> samples = sorted_copy(raw);
  const int n = static_cast<int>(samples.size());
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = samples[i].omega;
    y[i] = samples[i].y;
  }

  FitReport rep;
  rep.power = fit_power_law(samples);
  rep.power_rmse = rmse(rep.power, samples);

  // Linear family, ordinary least squares.
  const double nn = n, sx = x.sum(), sxx = x.squaredNorm();
  const double sy = y.sum(), sxy = x.dot(y);
  const double det = nn * sxx - sx * sx;
  if (det > 0.0) {
    rep.lin_b1 = (nn * sxy - sx * sy) / det;
    rep.lin_b2 = (sxx * sy - sx * sxy) / det;
  } else {
    rep.lin_b1 = 0.0;
    rep.lin_b2 = sy / nn;
  }
  rep.linear_rmse =
      rmse_of(rep.lin_b1 * x + Eigen::VectorXd::Constant(n, rep.lin_b2) - y);

  // Exponential family with a profiled amplitude.
  const Eigen::VectorXd xm1 = x.array() - 1.0;
  auto value = [&](double e2) { return profile_exp(e2, xm1, y).rmse; };
  std::vector<double> grid = {-20.0, -10.0, -5.0, -2.0, -1.0, -0.5, -0.1, -0.01,
                              0.01,  0.1,   0.5,  1.0,  2.0,  5.0,  10.0, 20.0};
  std::size_t best_i = 0;
  double best_v = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = value(grid[i]);
    if (v < best_v * (1.0 - 1e-12)) {
      best_v = v;
      best_i = i;
    }
  }
  while (best_i + 1 == grid.size() && std::abs(grid.back()) < kExpGuard / 2.0) {
    grid.push_back(grid.back() * 2.0);
    const double v = value(grid.back());
    if (v < best_v * (1.0 - 1e-12)) {
      best_v = v;
      best_i = grid.size() - 1;
    } else {
      break;
    }
  }
  while (best_i == 0 && std::abs(grid.front()) < kExpGuard / 2.0) {
    grid.insert(grid.begin(), grid.front() * 2.0);
    best_i = 1;
    const double v = value(grid.front());
    if (v < best_v * (1.0 - 1e-12)) {
      best_v = v;
      best_i = 0;
    } else {
      break;
    }
  }
  const double lo = best_i > 0 ? grid[best_i - 1] : grid[best_i] - 1.0;
  const double hi = best_i + 1 < grid.size() ? grid[best_i + 1] : grid[best_i] + 1.0;
  double e2 = golden_min(value, lo, hi);
  Profiled prof = profile_exp(e2, xm1, y);
  double e1p = prof.a, cur = prof.rmse;
  double lambda = 1e-3;

  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::VectorXd ev = (e2 * xm1.array()).exp();
    const Eigen::VectorXd v = ev.array() - 1.0;
    const Eigen::VectorXd r = e1p * v - y;
    Eigen::MatrixXd J(n, 2);
    J.col(0) = v;
    J.col(1) = e1p * xm1.cwiseProduct(ev);
    const Eigen::Matrix2d JtJ = J.transpose() * J;
    const Eigen::Vector2d Jtr = J.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix2d H = JtJ;
      H.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::Vector2d step = H.ldlt().solve(-Jtr);
      const double ne1 = e1p + step[0];
      const double ne2 = e2 + step[1];
      if (std::abs(ne2) > kExpGuard || (ne2 * xm1.array()).abs().maxCoeff() > kExpGuard) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd nv = (ne2 * xm1.array()).exp() - 1.0;
      const double nr = rmse_of(ne1 * nv - y);
      if (nr <= cur) {
        const double rel = std::abs(ne1 - e1p) / std::max(1.0, std::abs(e1p)) +
                           std::abs(ne2 - e2) / std::max(1.0, std::abs(e2));
        const bool done = rel < kParamTol || cur - nr < 1e-16 * (1.0 + cur);
        e1p = ne1;
        e2 = ne2;
        cur = nr;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (done) it = kMaxIter;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  rep.exp_e2 = e2;
  rep.exp_e1 = e1p * std::exp(-e2);
  rep.exp_rmse = cur;
  return rep;
}

std::vector<FitSample> parse_samples(const std::string& text) {
  std::vector<FitSample> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    FitSample s;
    if (row >> s.omega >> s.y) out.push_back(s);
  }
  return out;
}

std::vector<FitSample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sample file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_samples(buf.str());
}

}  // namespace cato
