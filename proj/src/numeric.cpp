#include "sflab/numeric.hpp"

#include <cmath>
#include <stdexcept>

namespace sflab {

// Nodes by Newton iteration on the Legendre recurrence, mapped to [0,1].
std::vector<QuadNode> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("quadrature order must be positive");
  std::vector<QuadNode> nodes(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = {0.5 * (1.0 - x), 0.5 * w};
    nodes[n - 1 - i] = {0.5 * (1.0 + x), 0.5 * w};
  }
  return nodes;
}

}  // namespace sflab
