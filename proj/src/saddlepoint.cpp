#include "sflab/saddlepoint.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sflab/numeric.hpp"
#include "sflab/rng.hpp"

namespace sflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> column_costs(const Pmf& p, const DistortionMatrix& d) {
  std::vector<double> cost(d.repro_size(), 0.0);
  for (int y = 0; y < d.repro_size(); ++y)
    for (int x = 0; x < p.size(); ++x) cost[y] += p[x] * d(x, y);
  return cost;
}

}  // namespace

double k_n(double s, double m, double delta, double n_distortion) {
  if (!(s > 0.0)) throw std::domain_error("k_n requires s > 0");
  if (!(m > 0.0)) throw std::domain_error("k_n requires a curved saddle (M > 0)");
  const double root = std::sqrt(2.0 * kPi * m);
  if (delta <= 0.0) return 1.0 / (s * root);
  double residue = n_distortion - delta * std::floor(n_distortion / delta);
  if (residue >= delta * (1.0 - 1e-9) || residue < 0.0) residue = 0.0;
  return delta * std::exp(-s * residue) / (-std::expm1(-s * delta) * root);
}

double simplex_volume_fraction(const std::vector<double>& col_cost, double distortion_level,
                               long samples, std::uint64_t seed, double* std_error) {
  if (samples < 1) throw std::invalid_argument("need at least one volume sample");
  const int j = static_cast<int>(col_cost.size());
  long inside = 0;
  for (long t = 0; t < samples; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    const auto q = sample_simplex(j, rng);
    double cost = 0.0;
    for (int y = 0; y < j; ++y) cost += q[y] * col_cost[y];
    if (cost <= distortion_level) ++inside;
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(samples);
  if (std_error) *std_error = std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples));
  return frac;
}

SuccessProb success_prob_estimate(const SourceBlock& x, const DistortionMatrix& d,
                                  double distortion_level, std::uint64_t mc_seed,
                                  long mc_samples) {
  if (!d.normalized())
    throw std::invalid_argument("success_prob_estimate requires a normalized matrix");
  const Pmf phat = empirical(x);
  const int n = x.n();
  const int j = d.repro_size();

  RdSolution sol = rd_function(phat, d, distortion_level);
  SuccessProb out;
  out.source = ProbSource::saddle_estimate;

  if (sol.zero_rate) {
    double se = 0.0;
    const double frac = simplex_volume_fraction(column_costs(phat, d), distortion_level,
                                                mc_samples, mc_seed, &se);
    out.branch = RateBranch::zero_rate;
    out.log_value = frac > 0.0 ? std::log(frac) : -kInf;
    out.std_error = se;
    return out;
  }

  curvature(phat, d, distortion_level, sol);
  if (!sol.hess_det)
    throw std::domain_error(
        "saddle estimate unavailable: q0 on the simplex boundary; fall back to exact oracles");

  const double kn = k_n(sol.s0, sol.m_s0q0, d.delta(), n * distortion_level);
  SaddleComponents parts;
  parts.rate_term = n * sol.rate;
  parts.poly_term = 0.5 * j * std::log(static_cast<double>(n));
  parts.const_term = log_factorial(j - 1) + 0.5 * (j - 1) * std::log(2.0 * kPi) +
                     std::log(kn) - 0.5 * std::log(*sol.hess_det);
  out.branch = RateBranch::positive_rate;
  out.log_value = -(parts.rate_term + parts.poly_term - parts.const_term);
  out.components = parts;
  return out;
}

SuccessProb success_prob_given_q(const SourceBlock& x, const DistortionMatrix& d,
                                 double distortion_level, const Qpmf& q) {
  if (!d.normalized())
    throw std::invalid_argument("success_prob_given_q requires a normalized matrix");
  const Pmf phat = empirical(x);
  const int n = x.n();

  double d_max_q = 0.0;
  for (int y = 0; y < q.size(); ++y) {
    double col = 0.0;
    for (int xx = 0; xx < phat.size(); ++xx) col += phat[xx] * d(xx, y);
    d_max_q += q[y] * col;
  }
  SuccessProb out;
  out.source = ProbSource::saddle_estimate;
  if (distortion_level > d_max_q) {
    out.branch = RateBranch::zero_rate;  // weak law: probability 1 - o(1)
    out.log_value = 0.0;
    return out;
  }
  if (distortion_level == d_max_q)
    throw std::domain_error("degenerate slope: D equals D_max(q) exactly");

  const double s0 = solve_s0(q, phat, d, distortion_level);
  if (!std::isfinite(s0)) {
    out.branch = RateBranch::positive_rate;  // below q-reachable distortion: empty sphere
    out.log_value = -kInf;
    return out;
  }
  const double m = tilted_distortion_var(s0, q, phat, d);
  const double kn = k_n(s0, m, d.delta(), n * distortion_level);
  const double f0 = eval_F(s0, q, phat, d, distortion_level);
  out.branch = RateBranch::positive_rate;
  out.log_value = std::log(kn) - n * f0 - 0.5 * std::log(static_cast<double>(n));
  return out;
}

}  // namespace sflab
