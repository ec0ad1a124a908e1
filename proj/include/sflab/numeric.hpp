#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace sflab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.6931471805599453094;

// Compensated summation for long probability sums.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double v) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline double log_sum_exp(std::span<const double> terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : terms)
    if (t > m) m = t;
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

inline double log_factorial(long long n) { return std::lgamma(static_cast<double>(n) + 1.0); }

struct QuadNode {
  double x;
  double w;
};

// Gauss-Legendre nodes and weights on [0,1].
std::vector<QuadNode> gauss_legendre(int n);

}  // namespace sflab
