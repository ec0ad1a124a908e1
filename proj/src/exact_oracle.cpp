#include "sflab/exact_oracle.hpp"

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
constexpr double kSphereSlack = 1e-9;      // d(x,xhat) <= nD + slack
constexpr double kEnumLimit = 1e7;         // J^n cap for full enumeration
constexpr std::size_t kDpCellLimit = 30'000'000;

std::vector<int> sorted_symbols(const SourceBlock& x) {
  std::vector<int> s = x.symbols;
  std::sort(s.begin(), s.end());  // oracle outputs depend on x only via its type
  return s;
}

void check_enum_size(int n, int j) {
  if (n * std::log(static_cast<double>(j)) > std::log(kEnumLimit))
    throw std::runtime_error("instance too large for full enumeration");
}

double sphere_threshold(const SourceBlock& x, double distortion_level) {
  return x.n() * distortion_level + kSphereSlack;
}

const double* log_fact_table(int upto) {
  static thread_local std::vector<double> table;
  if (static_cast<int>(table.size()) < upto + 1) {
    const int old = static_cast<int>(table.size());
    table.resize(upto + 1);
    for (int i = old; i <= upto; ++i) table[i] = log_factorial(i);
  }
  return table.data();
}

// Recursive sphere enumeration accumulating mixture weights by final type;
// the type-dependent part of ln W is maintained incrementally.
struct EnumWalker {
  const std::vector<int>& xs;
  const DistortionMatrix& d;
  const double* lf;
  double limit;
  double base;  // ln (J-1)! - ln (n+J-1)!
  int n;
  int j;
  std::vector<int> counts;
  KahanSum total;

  void walk(int pos, double dist, double logw) {
    if (pos == n) {
      total.add(std::exp(base + logw));
      return;
    }
    for (int y = 0; y < j; ++y) {
      const double next = dist + d(xs[pos], y);
      if (next > limit) continue;
      const int c = counts[y]++;
      walk(pos + 1, next, logw + lf[c + 1] - lf[c]);
      --counts[y];
    }
  }
};

// Integer distortion lattice for one rounding mode.
enum class Rounding { exact, floor, ceil };

struct Lattice {
  std::vector<long long> cell;  // K x J lattice indices
  long long threshold;          // sphere condition: sum of cells <= threshold
  int j;

  long long operator()(int x, int y) const { return cell[x * j + y]; }
};

Lattice build_lattice(const DistortionMatrix& d, double unit, double n_distortion,
                      Rounding mode) {
  Lattice lat;
  lat.j = d.repro_size();
  lat.cell.resize(d.entries().size());
  for (std::size_t i = 0; i < d.entries().size(); ++i) {
    const double r = d.entries()[i] / unit;
    switch (mode) {
      case Rounding::exact: {
        const double rounded = std::round(r);
        if (std::abs(r - rounded) > 1e-6)
          throw std::logic_error("distortion entry off its lattice");
        lat.cell[i] = static_cast<long long>(rounded);
        break;
      }
      case Rounding::floor:
        lat.cell[i] = static_cast<long long>(std::floor(r));
        break;
      case Rounding::ceil:
        lat.cell[i] = static_cast<long long>(std::ceil(r));
        break;
    }
  }
  lat.threshold = static_cast<long long>(std::floor(n_distortion / unit + 1e-9));
  return lat;
}

// DP over (position, first J-1 letter counts, accumulated lattice distortion).
// Cell values are raw sequence counts; the mixture weight enters only at the
// end, per final type.
double dp_log_success(const std::vector<int>& xs, int j, const Lattice& lat) {
  const int n = static_cast<int>(xs.size());
  const long long t_max = lat.threshold;
  if (t_max < 0) return -kInf;  // empty sphere

  std::size_t keys = 1;
  for (int a = 0; a < j - 1; ++a) {
    keys *= static_cast<std::size_t>(n + 1);
    if (keys > kDpCellLimit) throw std::runtime_error("type space too large for dp");
  }
  const std::size_t width = static_cast<std::size_t>(t_max) + 1;
  if (keys * width > kDpCellLimit)
    throw std::runtime_error("dp state space exceeds memory budget; use enum or monte carlo");

  std::vector<std::size_t> stride(j - 1);
  for (int a = 0; a < j - 1; ++a) {
    std::size_t s = 1;
    for (int b = 0; b < a; ++b) s *= static_cast<std::size_t>(n + 1);
    stride[a] = s;
  }

  std::vector<double> cur(keys * width, 0.0), next(keys * width);
  cur[0] = 1.0;
  for (int pos = 0; pos < n; ++pos) {
    std::fill(next.begin(), next.end(), 0.0);
    const int xsym = xs[pos];
    for (std::size_t key = 0; key < keys; ++key) {
      const double* row = &cur[key * width];
      for (std::size_t t = 0; t < width; ++t) {
        const double c = row[t];
        if (c == 0.0) continue;
        for (int y = 0; y < j; ++y) {
          const long long nt = static_cast<long long>(t) + lat(xsym, y);
          if (nt > t_max) continue;
          const std::size_t nkey = y < j - 1 ? key + stride[y] : key;
          next[nkey * width + static_cast<std::size_t>(nt)] += c;
        }
      }
    }
    cur.swap(next);
  }

  // Fold counts into mixture weights per final type.
  KahanSum total;
  std::vector<int> counts(j, 0);
  for (std::size_t key = 0; key < keys; ++key) {
    int used = 0;
    std::size_t rem = key;
    for (int a = 0; a < j - 1; ++a) {
      counts[a] = static_cast<int>(rem % static_cast<std::size_t>(n + 1));
      rem /= static_cast<std::size_t>(n + 1);
      used += counts[a];
    }
    if (used > n) continue;
    counts[j - 1] = n - used;
    KahanSum cell_sum;
    const double* row = &cur[key * width];
    for (std::size_t t = 0; t < width; ++t) cell_sum.add(row[t]);
    if (cell_sum.value() <= 0.0) continue;
    total.add(cell_sum.value() * std::exp(log_mixture_weight(counts, n)));
  }
  const double p = total.value();
  return p > 0.0 ? std::log(std::min(p, 1.0)) : -kInf;
}

// Tail mass of the convolution of per-letter distortion distributions under q.
double convolution_log_tail(const std::vector<int>& xs, const Qpmf& q, const Lattice& lat) {
  const long long t_max = lat.threshold;
  if (t_max < 0) return -kInf;
  const std::size_t width = static_cast<std::size_t>(t_max) + 1;
  if (width > kDpCellLimit)
    throw std::runtime_error("convolution lattice exceeds memory budget");

  std::vector<double> acc(width, 0.0), next(width);
  acc[0] = 1.0;
  for (int pos = 0; pos < static_cast<int>(xs.size()); ++pos) {
    std::fill(next.begin(), next.end(), 0.0);
    const int xsym = xs[pos];
    for (std::size_t t = 0; t < width; ++t) {
      const double mass = acc[t];
      if (mass == 0.0) continue;
      for (int y = 0; y < q.size(); ++y) {
        if (q[y] == 0.0) continue;
        const long long nt = static_cast<long long>(t) + lat(xsym, y);
        if (nt > t_max) continue;  // mass past the sphere can never return
        next[static_cast<std::size_t>(nt)] += mass * q[y];
      }
    }
    acc.swap(next);
  }
  KahanSum tail;
  for (double v : acc) tail.add(v);
  const double p = tail.value();
  return p > 0.0 ? std::log(std::min(p, 1.0)) : -kInf;
}

// Chooses the lattice unit: the matrix lattice constant when commensurable,
// otherwise an eps-grid with certified floor/ceil bracketing.
template <typename Eval>
SuccessProb bracketed(const DistortionMatrix& d, double n_distortion, ProbSource source,
                      Eval&& eval) {
  SuccessProb out;
  out.source = source;
  if (d.degenerate()) {
    // Distortion identically zero: everything is inside any sphere.
    out.log_value = n_distortion >= 0.0 ? 0.0 : -kInf;
    return out;
  }
  if (d.delta() > 0.0) {
    out.log_value = eval(build_lattice(d, d.delta(), n_distortion, Rounding::exact));
    return out;
  }
  const double eps = d.d_max() / 65536.0;
  const double lo = eval(build_lattice(d, eps, n_distortion, Rounding::ceil));
  const double hi = eval(build_lattice(d, eps, n_distortion, Rounding::floor));
  out.log_lower = lo;
  out.log_upper = hi;
  out.log_value = 0.5 * (lo + hi);
  return out;
}

}  // namespace

double log_mixture_weight(std::span<const int> counts, int n) {
  const int j = static_cast<int>(counts.size());
  const double* lf = log_fact_table(n + j);
  double acc = lf[j - 1] - lf[n + j - 1];
  for (int c : counts) acc += lf[c];
  return acc;
}

double log_mixture_weight(const ReproBlock& xhat) {
  std::vector<int> counts(xhat.alphabet_size, 0);
  for (int s : xhat.symbols) ++counts[s];
  return log_mixture_weight(counts, xhat.n());
}

SuccessProb success_exact_enum(const SourceBlock& x, const DistortionMatrix& d,
                               double distortion_level) {
  const int n = x.n();
  const int j = d.repro_size();
  check_enum_size(n, j);
  const auto xs = sorted_symbols(x);
  const double* lf = log_fact_table(n + j);
  EnumWalker walker{xs,
                    d,
                    lf,
                    sphere_threshold(x, distortion_level),
                    lf[j - 1] - lf[n + j - 1],
                    n,
                    j,
                    std::vector<int>(j, 0),
                    {}};
  walker.walk(0, 0.0, 0.0);
  SuccessProb out;
  out.source = ProbSource::exact_enum;
  const double p = walker.total.value();
  out.log_value = p > 0.0 ? std::log(std::min(p, 1.0)) : -kInf;
  return out;
}

SuccessProb success_exact_dp(const SourceBlock& x, const DistortionMatrix& d,
                             double distortion_level) {
  const auto xs = sorted_symbols(x);
  const int j = d.repro_size();
  return bracketed(d, x.n() * distortion_level, ProbSource::exact_dp,
                   [&](const Lattice& lat) { return dp_log_success(xs, j, lat); });
}

SuccessProb success_given_q_convolution(const SourceBlock& x, const DistortionMatrix& d,
                                        double distortion_level, const Qpmf& q) {
  if (q.size() != d.repro_size())
    throw std::invalid_argument("q size does not match distortion matrix");
  const auto xs = sorted_symbols(x);
  return bracketed(d, x.n() * distortion_level, ProbSource::exact_convolution,
                   [&](const Lattice& lat) { return convolution_log_tail(xs, q, lat); });
}

SuccessProb success_quadrature_j2(const SourceBlock& x, const DistortionMatrix& d,
                                  double distortion_level, int nodes) {
  if (d.repro_size() != 2)
    throw std::invalid_argument("quadrature route is defined for J = 2 only");
  const auto grid = gauss_legendre(nodes);
  KahanSum total;
  for (const auto& node : grid) {
    const Qpmf q{std::vector<double>{node.x, 1.0 - node.x}};
    const SuccessProb per_q = success_given_q_convolution(x, d, distortion_level, q);
    total.add(node.w * std::exp(per_q.log_value));
  }
  SuccessProb out;
  out.source = ProbSource::quadrature;
  const double p = total.value();
  out.log_value = p > 0.0 ? std::log(std::min(p, 1.0)) : -kInf;
  return out;
}

SuccessProb success_monte_carlo(const SourceBlock& x, const DistortionMatrix& d,
                                double distortion_level, long trials, std::uint64_t seed) {
  if (trials < 10'000) throw std::invalid_argument("monte carlo needs at least 1e4 trials");
  const int n = x.n();
  const int j = d.repro_size();
  const double limit = sphere_threshold(x, distortion_level);
  long hits = 0;
  for (long t = 0; t < trials; ++t) {
    CounterRng rng(seed, static_cast<std::uint64_t>(t));
    const auto q = sample_simplex(j, rng);
    double dist = 0.0;
    bool inside = true;
    for (int i = 0; i < n; ++i) {
      const int letter = sample_letter(q, rng.next_unit());
      dist += d(x.symbols[i], letter);
      if (dist > limit) {
        inside = false;
        break;
      }
    }
    if (inside) ++hits;
  }
  const double nt = static_cast<double>(trials);
  const double phat = static_cast<double>(hits) / nt;
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nt;
  const double center = (phat + z2 / (2.0 * nt)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nt + z2 / (4.0 * nt * nt)) / denom;

  SuccessProb out;
  out.source = ProbSource::monte_carlo;
  out.log_value = phat > 0.0 ? std::log(phat) : -kInf;
  const double lo = std::max(0.0, center - half);
  const double hi = std::min(1.0, center + half);
  out.log_lower = lo > 0.0 ? std::log(lo) : -kInf;
  out.log_upper = hi > 0.0 ? std::log(hi) : -kInf;
  out.std_error = std::sqrt(phat * (1.0 - phat) / nt);
  return out;
}

}  // namespace sflab
