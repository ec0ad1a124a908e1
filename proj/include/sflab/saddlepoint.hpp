#pragma once

#include <cstdint>

#include "sflab/core_types.hpp"
#include "sflab/rd_solver.hpp"
#include "sflab/success_prob.hpp"

namespace sflab {

// Oscillatory sub-exponential correction
//   K_n[s,Q] = Delta e^{-s[(nD) mod Delta]} / [(1 - e^{-s Delta}) sqrt(2 pi M)],
// with the Delta -> 0 limit 1 / (s sqrt(2 pi M)). Residues within 1e-9*Delta
// of Delta snap to 0 before entering the exponent.
double k_n(double s, double m, double delta, double n_distortion);

// Fraction of the simplex with expected column cost <= D, by Monte Carlo with
// exponential-spacings sampling. Returns the fraction; std_error receives the
// binomial standard error.
double simplex_volume_fraction(const std::vector<double>& col_cost, double distortion_level,
                               long samples, std::uint64_t seed, double* std_error);

// Closed-form estimate of the single-selection success probability. The
// positive-rate branch assembles rate, polynomial, and constant terms from an
// rd_function + curvature solve; the zero-rate branch is (J-1)! times the
// simplex volume fraction, estimated by Monte Carlo (the fraction itself,
// since (J-1)! * Vol(simplex) = 1). Throws std::domain_error when q0 sits on
// the simplex boundary and no interior Hessian exists.
SuccessProb success_prob_estimate(const SourceBlock& x, const DistortionMatrix& d,
                                  double distortion_level,
                                  std::uint64_t mc_seed = 0x5eedf01dULL,
                                  long mc_samples = 1'000'000);

// Same estimate against one fixed q (no simplex integration):
// K_n[s0(q), q] e^{-n F(s0(q), q)} / sqrt(n) when D < D_max(q), probability
// ~ 1 when D > D_max(q); exact equality is a degenerate-slope error.
SuccessProb success_prob_given_q(const SourceBlock& x, const DistortionMatrix& d,
                                 double distortion_level, const Qpmf& q);

}  // namespace sflab
