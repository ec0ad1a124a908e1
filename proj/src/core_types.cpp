#include "sflab/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace sflab {

namespace {

void check_probs(const std::vector<double>& probs) {
  if (probs.empty()) throw std::invalid_argument("probability vector is empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("negative probability entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("probabilities do not sum to 1");
}

// Continued-fraction rationalization of r >= 1. A true rational with a small
// denominator is recovered to machine precision within a few steps; anything
// still unresolved at denominator > max_den is treated as irrational.
bool rationalize(double r, std::int64_t max_den, std::int64_t& num, std::int64_t& den) {
  constexpr double kAcceptTol = 1e-13;  // relative; well above double noise
  double x = r;
  std::int64_t p_prev = 0, q_prev = 1;
  std::int64_t p_cur = 1, q_cur = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_f = std::floor(x);
    if (a_f > static_cast<double>(std::numeric_limits<std::int64_t>::max() / 4)) return false;
    const auto a = static_cast<std::int64_t>(a_f);
    const std::int64_t p_next = a * p_cur + p_prev;
    const std::int64_t q_next = a * q_cur + q_prev;
    if (q_next > max_den) return false;
    p_prev = p_cur;
    q_prev = q_cur;
    p_cur = p_next;
    q_cur = q_next;
    const double approx = static_cast<double>(p_cur) / static_cast<double>(q_cur);
    if (std::abs(approx - r) <= kAcceptTol * r) {
      num = p_cur;
      den = q_cur;
      return true;
    }
    const double frac = x - a_f;
    if (frac < 1e-15) return false;  // terminated without meeting tolerance
    x = 1.0 / frac;
  }
  return false;
}

__int128 gcd128(__int128 a, __int128 b) {
  while (b != 0) {
    const __int128 t = a % b;
    a = b;
    b = t;
  }
  return a < 0 ? -a : a;
}

double lattice_constant(const std::vector<double>& entries) {
  double base = std::numeric_limits<double>::infinity();
  for (double e : entries)
    if (e > 0.0 && e < base) base = e;
  if (!std::isfinite(base)) return 0.0;  // identically zero matrix

  // Maintain the gcd of {entry/base} as a reduced fraction num/den.
  std::int64_t num = 0, den = 1;
  for (double e : entries) {
    if (e <= 0.0) continue;
    std::int64_t p = 0, q = 1;
    if (!rationalize(e / base, 1'000'000, p, q)) return 0.0;
    // gcd(num/den, p/q) = gcd(num*q, p*den) / (den*q)
    __int128 g = gcd128(static_cast<__int128>(num) * q, static_cast<__int128>(p) * den);
    __int128 new_den = static_cast<__int128>(den) * q;
    const __int128 r = gcd128(g, new_den);
    g /= r;
    new_den /= r;
    if (g > std::numeric_limits<std::int64_t>::max() ||
        new_den > std::numeric_limits<std::int64_t>::max())
      return 0.0;
    num = static_cast<std::int64_t>(g);
    den = static_cast<std::int64_t>(new_den);
  }
  const double delta = base * static_cast<double>(num) / static_cast<double>(den);
  if (!(delta > 0.0)) return 0.0;
  // Verify the divisibility the lattice promises.
  for (double e : entries) {
    if (e <= 0.0) continue;
    const double ratio = e / delta;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) return 0.0;
  }
  return delta;
}

}  // namespace

Pmf::Pmf(std::vector<double> probs) : probs_(std::move(probs)) { check_probs(probs_); }

Pmf Pmf::uniform(int k) {
  if (k < 1) throw std::invalid_argument("alphabet size must be positive");
  return Pmf(std::vector<double>(k, 1.0 / k));
}

Qpmf::Qpmf(std::vector<double> probs) : probs_(std::move(probs)) { check_probs(probs_); }

Qpmf Qpmf::uniform(int j) {
  if (j < 1) throw std::invalid_argument("alphabet size must be positive");
  return Qpmf(std::vector<double>(j, 1.0 / j));
}

DistortionMatrix::DistortionMatrix(int k, int j, std::vector<double> entries)
    : k_(k), j_(j), entries_(std::move(entries)) {
  if (k_ < 1 || j_ < 1) throw std::invalid_argument("alphabet sizes must be positive");
  if (entries_.size() != static_cast<std::size_t>(k_) * j_)
    throw std::invalid_argument("distortion matrix has wrong number of entries");
  d_max_ = 0.0;
  for (double e : entries_) {
    if (!std::isfinite(e) || e < 0.0)
      throw std::invalid_argument("distortion entries must be finite and nonnegative");
    d_max_ = std::max(d_max_, e);
  }
  normalized_ = true;
  for (int x = 0; x < k_; ++x)
    if (row_min(x) != 0.0) normalized_ = false;
  delta_ = normalized_ ? lattice_constant(entries_) : 0.0;
}

DistortionMatrix DistortionMatrix::hamming(int k) {
  std::vector<double> e(static_cast<std::size_t>(k) * k, 1.0);
  for (int i = 0; i < k; ++i) e[i * k + i] = 0.0;
  return DistortionMatrix(k, k, std::move(e));
}

double DistortionMatrix::row_min(int x) const {
  double m = entries_[x * j_];
  for (int j = 1; j < j_; ++j) m = std::min(m, entries_[x * j_ + j]);
  return m;
}

SourceBlock::SourceBlock(std::vector<int> syms, int k)
    : symbols(std::move(syms)), alphabet_size(k) {
  if (symbols.empty()) throw std::invalid_argument("source block must be nonempty");
  for (int s : symbols)
    if (s < 0 || s >= k) throw std::invalid_argument("source symbol out of range");
}

ReproBlock::ReproBlock(std::vector<int> syms, int j)
    : symbols(std::move(syms)), alphabet_size(j) {
  for (int s : symbols)
    if (s < 0 || s >= j) throw std::invalid_argument("reproduction symbol out of range");
}

double NormalizedDistortion::shift(const Pmf& p) const {
  if (p.size() != static_cast<int>(row_mins.size()))
    throw std::invalid_argument("pmf size does not match matrix");
  double s = 0.0;
  for (int x = 0; x < p.size(); ++x) s += p[x] * row_mins[x];
  return s;
}

NormalizedDistortion normalize_distortion(const DistortionMatrix& d) {
  const int k = d.source_size();
  const int j = d.repro_size();
  std::vector<double> mins(k);
  std::vector<double> entries(static_cast<std::size_t>(k) * j);
  for (int x = 0; x < k; ++x) {
    mins[x] = d.row_min(x);
    for (int y = 0; y < j; ++y) entries[x * j + y] = d(x, y) - mins[x];
  }
  return NormalizedDistortion{DistortionMatrix(k, j, std::move(entries)), std::move(mins)};
}

double compute_delta(const DistortionMatrix& d) {
  if (!d.normalized())
    throw std::invalid_argument("compute_delta requires a normalized matrix");
  return d.delta();
}

Pmf empirical(const SourceBlock& x) {
  std::vector<double> counts(x.alphabet_size, 0.0);
  for (int s : x.symbols) counts[s] += 1.0;
  const double n = static_cast<double>(x.n());
  for (double& c : counts) c /= n;
  return Pmf(std::move(counts));
}

double block_distortion(const SourceBlock& x, const ReproBlock& xhat,
                        const DistortionMatrix& d) {
  if (x.n() != xhat.n()) throw std::invalid_argument("block length mismatch");
  if (x.alphabet_size > d.source_size() || xhat.alphabet_size > d.repro_size())
    throw std::invalid_argument("alphabet larger than distortion matrix");
  double total = 0.0;
  for (int i = 0; i < x.n(); ++i) total += d(x.symbols[i], xhat.symbols[i]);
  return total;
}

DistortionMatrix read_distortion_matrix(std::istream& in) {
  int k = 0, j = 0;
  if (!(in >> k >> j)) throw std::runtime_error("distortion file: missing K J header");
  if (k < 1 || j < 1) throw std::runtime_error("distortion file: bad dimensions");
  std::vector<double> entries(static_cast<std::size_t>(k) * j);
  for (auto& e : entries)
    if (!(in >> e)) throw std::runtime_error("distortion file: truncated entries");
  return DistortionMatrix(k, j, std::move(entries));
}

std::vector<int> read_symbol_sequence(std::istream& in) {
  std::vector<int> syms;
  int v = 0;
  while (in >> v) syms.push_back(v);
  return syms;
}

void write_symbol_sequence(std::ostream& out, const std::vector<int>& syms) {
  for (std::size_t i = 0; i < syms.size(); ++i) {
    if (i) out << ' ';
    out << syms[i];
  }
  out << '\n';
}

}  // namespace sflab
