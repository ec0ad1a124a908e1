#pragma once

#include <cstdint>
#include <span>

#include "sflab/core_types.hpp"
#include "sflab/success_prob.hpp"

namespace sflab {

// ln W(xhat) for the uniform mixture of memoryless sources over J letters:
// depends on xhat only through its letter counts.
double log_mixture_weight(std::span<const int> counts, int n);
double log_mixture_weight(const ReproBlock& xhat);

// P_s by full enumeration of the reproduction space. Guarded to J^n <= 1e7.
SuccessProb success_exact_enum(const SourceBlock& x, const DistortionMatrix& d,
                               double distortion_level);

// P_s by dynamic programming over (prefix, type vector, lattice distortion).
// Exact for delta > 0; for delta = 0 the distortion is rounded to an
// eps-lattice (eps = d_max / 2^16) and [log_lower, log_upper] is a certified
// bracket, with log_value their midpoint.
SuccessProb success_exact_dp(const SourceBlock& x, const DistortionMatrix& d,
                             double distortion_level);

// Tail mass P{ d(x, Xhat) <= nD } for Xhat i.i.d. from a fixed q, by lattice
// convolution of the per-letter distortion distributions.
SuccessProb success_given_q_convolution(const SourceBlock& x, const DistortionMatrix& d,
                                        double distortion_level, const Qpmf& q);

// J = 2 only: mixes the per-q convolution over the simplex segment with
// Gauss-Legendre quadrature. Independent route to the same quantity as
// enum/dp, used for cross-validation.
SuccessProb success_quadrature_j2(const SourceBlock& x, const DistortionMatrix& d,
                                  double distortion_level, int nodes = 400);

// Empirical frequency of W-drawn codewords landing in the sphere, with a 95%
// Wilson interval in [log_lower, log_upper]. trials >= 1e4 enforced.
SuccessProb success_monte_carlo(const SourceBlock& x, const DistortionMatrix& d,
                                double distortion_level, long trials, std::uint64_t seed);

}  // namespace sflab
