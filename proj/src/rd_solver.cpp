#include "sflab/rd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sflab/numeric.hpp"
#include "sflab/rng.hpp"

namespace sflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kS0Tol = 1e-10;        // |tilted mean - D| at the returned root
constexpr double kZeroRateTol = 1e-12;  // zero-rate detection slack
constexpr double kStationTol = 1e-8;    // simplex stationarity certificate
constexpr double kClampTol = 1e-12;     // q0 components below this are zeroed

void check_dims(const Qpmf& q, const Pmf& p, const DistortionMatrix& d) {
  if (q.size() != d.repro_size() || p.size() != d.source_size())
    throw std::invalid_argument("pmf sizes do not match distortion matrix");
}

// Per-source-letter tilted statistics computed against shifted exponents so
// arbitrarily large s stays finite.
struct TiltedRow {
  double mean;
  double var;
  double log_partition;  // ln sum_j q_j e^{-s d}
};

TiltedRow tilted_row(double s, const std::vector<double>& logq, int x,
                     const DistortionMatrix& d) {
  const int j = d.repro_size();
  double m = -kInf;
  for (int y = 0; y < j; ++y) {
    if (logq[y] == -kInf) continue;
    m = std::max(m, logq[y] - s * d(x, y));
  }
  if (m == -kInf) return {0.0, 0.0, -kInf};
  double w = 0.0, wd = 0.0, wdd = 0.0;
  for (int y = 0; y < j; ++y) {
    if (logq[y] == -kInf) continue;
    const double dist = d(x, y);
    const double e = std::exp(logq[y] - s * dist - m);
    w += e;
    wd += e * dist;
    wdd += e * dist * dist;
  }
  const double mean = wd / w;
  const double var = std::max(0.0, wdd / w - mean * mean);
  return {mean, var, m + std::log(w)};
}

std::vector<double> log_probs(const std::vector<double>& probs) {
  std::vector<double> lg(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    lg[i] = probs[i] > 0.0 ? std::log(probs[i]) : -kInf;
  return lg;
}

double tilted_mean_impl(double s, const std::vector<double>& logq, const Pmf& p,
                        const DistortionMatrix& d) {
  double acc = 0.0;
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    const TiltedRow row = tilted_row(s, logq, x, d);
    if (row.log_partition == -kInf)
      throw std::domain_error("tilted channel has empty support for a source letter");
    acc += p[x] * row.mean;
  }
  return acc;
}

double eval_F_impl(double s, const std::vector<double>& logq, const Pmf& p,
                   const DistortionMatrix& d, double distortion_level) {
  double acc = 0.0;
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    const TiltedRow row = tilted_row(s, logq, x, d);
    if (row.log_partition == -kInf)
      throw std::domain_error("F(s,q): inner sum vanishes for a supported source letter");
    acc += p[x] * row.log_partition;
  }
  return -acc - s * distortion_level;
}

// Root of tilted mean = D. Assumes D < tilted mean at s = 0 and D at or above
// the support minimum; bisection with geometric upper-bracket expansion.
double solve_s0_impl(const std::vector<double>& logq, const Pmf& p,
                     const DistortionMatrix& d, double distortion_level,
                     double hint = 1.0) {
  double lo = 0.0;
  double hi = std::max(1e-6, hint);
  int guard = 0;
  while (tilted_mean_impl(hi, logq, p, d) > distortion_level) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 80) break;  // distortion floor reached within double range
  }
  double mid = hi;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double gap = tilted_mean_impl(mid, logq, p, d) - distortion_level;
    if (std::abs(gap) <= kS0Tol) return mid;
    if (gap > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

double q_reachable_min(const std::vector<double>& logq, const Pmf& p,
                       const DistortionMatrix& d) {
  double acc = 0.0;
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    double m = kInf;
    for (int y = 0; y < d.repro_size(); ++y)
      if (logq[y] != -kInf) m = std::min(m, d(x, y));
    if (m == kInf)
      throw std::domain_error("q has empty support");
    acc += p[x] * m;
  }
  return acc;
}

double expected_distortion_at_zero(const std::vector<double>& q, const Pmf& p,
                                   const DistortionMatrix& d) {
  double acc = 0.0;
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    double row = 0.0;
    for (int y = 0; y < d.repro_size(); ++y) row += q[y] * d(x, y);
    acc += p[x] * row;
  }
  return acc;
}

// Objective of the outer minimization: G(q) = F(s0(q), q). The gradient in q
// treats s0(q) as fixed (envelope theorem, since dF/ds = 0 at s0).
struct OuterObjective {
  const Pmf& p;
  const DistortionMatrix& d;
  double distortion_level;

  double value(const std::vector<double>& q, double& s0_hint) const {
    const auto logq = log_probs(q);
    const double dmax_q = expected_distortion_at_zero(q, p, d);
    double s0 = 0.0;
    if (distortion_level < dmax_q)
      s0 = solve_s0_impl(logq, p, d, distortion_level, s0_hint);
    s0_hint = std::max(s0, 1e-6);
    return eval_F_impl(s0, logq, p, d, distortion_level);
  }

  // Gradient of F in q at fixed s: dF/dq_j = -sum_x p(x) e^{-s d(x,j)} / Z_x.
  std::vector<double> gradient(const std::vector<double>& q, double s0) const {
    const auto logq = log_probs(q);
    const int j = d.repro_size();
    std::vector<double> g(j, 0.0);
    for (int x = 0; x < p.size(); ++x) {
      if (p[x] == 0.0) continue;
      const TiltedRow row = tilted_row(s0, logq, x, d);
      for (int y = 0; y < j; ++y)
        g[y] -= p[x] * std::exp(-s0 * d(x, y) - row.log_partition);
    }
    return g;
  }
};

struct EgState {
  std::vector<double> q;
  double value = kInf;
  double stationarity = kInf;
  double s0 = 0.0;
};

// Stationarity over the simplex: interior coordinates must have gradient equal
// to the q-weighted mean, vanished coordinates must not want mass back.
double stationarity_measure(const std::vector<double>& q, const std::vector<double>& g) {
  double gbar = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) gbar += q[j] * g[j];
  double worst = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (q[j] > 1e-15)
      worst = std::max(worst, std::abs(g[j] - gbar));
    else
      worst = std::max(worst, std::max(0.0, gbar - g[j]));
  }
  return worst;
}

EgState eg_minimize(const OuterObjective& obj, std::vector<double> q, int max_iters) {
  EgState st;
  double s0_hint = 1.0;
  double value = obj.value(q, s0_hint);
  double step = 1.0;
  for (int it = 0; it < max_iters; ++it) {
    const double s0 = s0_hint;
    const auto g = obj.gradient(q, s0);
    double gbar = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) gbar += q[j] * g[j];
    const double station = stationarity_measure(q, g);
    if (station <= 0.3 * kStationTol) {
      st.q = q;
      st.value = value;
      st.stationarity = station;
      st.s0 = s0;
      return st;
    }
    // Directional derivative of the exponentiated-gradient path at 0.
    double slope = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j)
      slope += q[j] * (g[j] - gbar) * (g[j] - gbar);
    // Near the optimum the guaranteed decrease falls under double noise;
    // flat steps are still accepted so the multiplicative contraction can
    // finish the job.
    const double noise = 4e-16 * (1.0 + std::abs(value));
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> trial(q.size());
      double norm = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) {
        trial[j] = q[j] * std::exp(-step * (g[j] - gbar));
        norm += trial[j];
      }
      for (double& v : trial) v /= norm;
      double trial_hint = s0_hint;
      const double trial_value = obj.value(trial, trial_hint);
      if (trial_value <= value - 0.25 * step * slope + noise) {
        q = std::move(trial);
        value = trial_value;
        s0_hint = trial_hint;
        step = std::min(step * 1.5, 1e6);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no progress at the smallest step
  }
  double s0_final = s0_hint;
  st.value = obj.value(q, s0_final);
  const auto g = obj.gradient(q, s0_final);
  st.stationarity = stationarity_measure(q, g);
  st.s0 = s0_final;
  st.q = std::move(q);
  return st;
}

}  // namespace

double eval_F(double s, const Qpmf& q, const Pmf& p, const DistortionMatrix& d,
              double distortion_level) {
  if (s < 0.0) throw std::invalid_argument("slope s must be nonnegative");
  check_dims(q, p, d);
  return eval_F_impl(s, log_probs(q.probs()), p, d, distortion_level);
}

double tilted_distortion_mean(double s, const Qpmf& q, const Pmf& p,
                              const DistortionMatrix& d) {
  check_dims(q, p, d);
  return tilted_mean_impl(s, log_probs(q.probs()), p, d);
}

double tilted_distortion_var(double s, const Qpmf& q, const Pmf& p,
                             const DistortionMatrix& d) {
  check_dims(q, p, d);
  const auto logq = log_probs(q.probs());
  double acc = 0.0;
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    acc += p[x] * tilted_row(s, logq, x, d).var;
  }
  return acc;
}

double solve_s0(const Qpmf& q, const Pmf& p, const DistortionMatrix& d,
                double distortion_level) {
  if (distortion_level < 0.0) throw std::invalid_argument("distortion level must be >= 0");
  check_dims(q, p, d);
  const auto logq = log_probs(q.probs());
  const double dmax_q = expected_distortion_at_zero(q.probs(), p, d);
  if (distortion_level >= dmax_q) return 0.0;
  if (distortion_level < q_reachable_min(logq, p, d)) return kInf;
  return solve_s0_impl(logq, p, d, distortion_level);
}

RdSolution rd_function(const Pmf& p, const DistortionMatrix& d, double distortion_level) {
  if (distortion_level < 0.0) throw std::invalid_argument("distortion level must be >= 0");
  if (p.size() != d.source_size())
    throw std::invalid_argument("pmf size does not match distortion matrix");
  const int j = d.repro_size();

  // Zero-rate regime: some column already meets the distortion budget.
  std::vector<double> col_cost(j, 0.0);
  for (int y = 0; y < j; ++y)
    for (int x = 0; x < p.size(); ++x) col_cost[y] += p[x] * d(x, y);
  const int best_col =
      static_cast<int>(std::min_element(col_cost.begin(), col_cost.end()) - col_cost.begin());
  if (col_cost[best_col] <= distortion_level + kZeroRateTol) {
    std::vector<double> point(j, 0.0);
    point[best_col] = 1.0;
    RdSolution sol{Qpmf(std::move(point))};
    sol.rate = 0.0;
    sol.s0 = 0.0;
    sol.zero_rate = true;
    sol.d_max_q0 = col_cost[best_col];
    sol.stationarity = 0.0;
    return sol;
  }

  const OuterObjective obj{p, d, distortion_level};
  EgState best;
  CounterRng starts_rng(0x5f1abd5eedULL);
  for (int start = 0; start < 6; ++start) {
    std::vector<double> q0 = start == 0 ? std::vector<double>(j, 1.0 / j)
                                        : sample_simplex(j, starts_rng);
    EgState st = eg_minimize(obj, std::move(q0), 20000);
    if (st.value < best.value) best = std::move(st);
  }

  // Clamp negligible components and re-polish on the reduced support.
  bool clamped = false;
  for (double& v : best.q) {
    if (v > 0.0 && v < kClampTol) {
      v = 0.0;
      clamped = true;
    }
  }
  if (clamped) {
    double norm = 0.0;
    for (double v : best.q) norm += v;
    for (double& v : best.q) v /= norm;
    best = eg_minimize(obj, best.q, 20000);
    for (double& v : best.q) {
      if (v > 0.0 && v < kClampTol) v = 0.0;
    }
    double renorm = 0.0;
    for (double v : best.q) renorm += v;
    for (double& v : best.q) v /= renorm;
  }
  if (best.stationarity > kStationTol) {
    best = eg_minimize(obj, best.q, 200000);
    if (best.stationarity > kStationTol)
      throw std::runtime_error("rd_function: stationarity certificate not reached");
  }

  RdSolution sol{Qpmf(best.q)};
  sol.rate = std::max(0.0, best.value);
  sol.s0 = best.s0;
  sol.zero_rate = false;
  sol.d_max_q0 = expected_distortion_at_zero(best.q, p, d);
  sol.stationarity = best.stationarity;
  return sol;
}

void curvature(const Pmf& p, const DistortionMatrix& d, double distortion_level,
               RdSolution& sol) {
  if (sol.zero_rate || !(sol.s0 > 0.0))
    throw std::invalid_argument("curvature requires a positive-rate solution");
  sol.m_s0q0 = tilted_distortion_var(sol.s0, sol.q0, p, d);

  const int j = d.repro_size();
  for (int y = 0; y < j; ++y) {
    if (sol.q0[y] < 1e-6) {
      sol.hess_det.reset();  // boundary optimum: the (J-1)-dim Hessian is not defined
      return;
    }
  }

  const double h = 1e-4;
  const OuterObjective obj{p, d, distortion_level};
  auto probe = [&](int a, double da, int b, double db) {
    std::vector<double> q = sol.q0.probs();
    q[a] += da;
    q[j - 1] -= da;
    q[b] += db;
    q[j - 1] -= db;
    for (double v : q)
      if (v <= 0.0) throw std::runtime_error("curvature: finite-difference probe left the simplex");
    double hint = sol.s0;
    return obj.value(q, hint);
  };

  const int m = j - 1;
  std::vector<double> hess(static_cast<std::size_t>(m) * m, 0.0);
  double hint0 = sol.s0;
  const double g0 = obj.value(sol.q0.probs(), hint0);
  for (int a = 0; a < m; ++a) {
    hess[a * m + a] = (probe(a, h, a, 0.0) - 2.0 * g0 + probe(a, -h, a, 0.0)) / (h * h);
    for (int b = a + 1; b < m; ++b) {
      const double v = (probe(a, h, b, h) - probe(a, h, b, -h) - probe(a, -h, b, h) +
                        probe(a, -h, b, -h)) /
                       (4.0 * h * h);
      hess[a * m + b] = v;
      hess[b * m + a] = v;
    }
  }

  // Determinant by Gaussian elimination with partial pivoting (m <= 3 here).
  double det = 1.0;
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(hess[r * m + col]) > std::abs(hess[piv * m + col])) piv = r;
    if (piv != col) {
      for (int c = 0; c < m; ++c) std::swap(hess[piv * m + c], hess[col * m + c]);
      det = -det;
    }
    const double diag = hess[col * m + col];
    det *= diag;
    if (diag == 0.0) break;
    for (int r = col + 1; r < m; ++r) {
      const double f = hess[r * m + col] / diag;
      for (int c = col; c < m; ++c) hess[r * m + c] -= f * hess[col * m + c];
    }
  }
  if (!(det > 1e-12))
    throw std::runtime_error("curvature: Hessian determinant is not positive");
  sol.hess_det = det;
}

}  // namespace sflab
