#pragma once

#include <optional>

namespace sflab {

enum class RateBranch { positive_rate, zero_rate };

enum class ProbSource {
  saddle_estimate,
  exact_enum,
  exact_dp,
  exact_convolution,
  quadrature,
  monte_carlo,
};

// Decomposition of a positive-rate saddle estimate:
//   log P = -(rate_term + poly_term - const_term).
struct SaddleComponents {
  double rate_term;   // n * R
  double poly_term;   // (J/2) ln n
  double const_term;  // ln[(J-1)! (2pi)^{(J-1)/2} K_n / sqrt(hess_det)]
};

// A log-domain success probability with provenance. For eps-lattice
// bracketing and interval estimates, [log_lower, log_upper] bounds the true
// value; std_error is the Monte Carlo standard error of the linear-domain
// estimate where applicable.
struct SuccessProb {
  double log_value = 0.0;
  RateBranch branch = RateBranch::positive_rate;
  ProbSource source = ProbSource::exact_enum;
  std::optional<SaddleComponents> components;
  std::optional<double> log_lower;
  std::optional<double> log_upper;
  std::optional<double> std_error;
};

}  // namespace sflab
