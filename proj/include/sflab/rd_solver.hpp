#pragma once

#include <optional>

#include "sflab/core_types.hpp"

namespace sflab {

// Rate-distortion value at distortion level D together with the achieving
// Lagrange slope s0, reproduction distribution q0, and the curvature data the
// saddle-point estimate consumes.
struct RdSolution {
  explicit RdSolution(Qpmf q) : q0(std::move(q)) {}

  double rate = 0.0;  // nats per symbol
  double s0 = 0.0;    // nats per distortion unit
  Qpmf q0;
  double m_s0q0 = 0.0;             // |d^2 F / d s^2| at (s0, q0); filled by curvature()
  std::optional<double> hess_det;  // det of the (J-1)x(J-1) Hessian; absent at boundary q0
  bool zero_rate = false;
  double d_max_q0 = 0.0;   // expected distortion of q0 at s = 0
  double stationarity = 0.0;  // certified max |projected gradient| at q0
};

// Dual objective F(s,q) = -sum_x p(x) ln[sum_xhat q(xhat) e^{-s d(x,xhat)}] - sD,
// evaluated with log-sum-exp over xhat.
double eval_F(double s, const Qpmf& q, const Pmf& p, const DistortionMatrix& d,
              double distortion_level);

// Expected distortion under the tilted per-letter channel at slope s.
double tilted_distortion_mean(double s, const Qpmf& q, const Pmf& p,
                              const DistortionMatrix& d);

// Variance of the tilted distortion = |d^2 F / d s^2|.
double tilted_distortion_var(double s, const Qpmf& q, const Pmf& p,
                             const DistortionMatrix& d);

// Unique root of tilted mean = D for D < D_max(q), 0 for D >= D_max(q),
// +infinity sentinel when D is below the q-reachable minimum distortion.
double solve_s0(const Qpmf& q, const Pmf& p, const DistortionMatrix& d,
                double distortion_level);

// min over q of sup over s >= 0 of F(s, q), by exponentiated-gradient descent
// over the simplex from multiple starts.
RdSolution rd_function(const Pmf& p, const DistortionMatrix& d, double distortion_level);

// Fills m_s0q0 (analytic tilted variance) and hess_det (central finite
// differences of q -> F(s0(q), q) on the first J-1 coordinates, h = 1e-4,
// with s0 re-solved at every probe). Requires a positive-rate solution;
// leaves hess_det absent when q0 sits on the simplex boundary.
void curvature(const Pmf& p, const DistortionMatrix& d, double distortion_level,
               RdSolution& sol);

}  // namespace sflab
