#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace sflab {

// Counter-based generator: output k is a pure function of (seed, stream, k),
// so any draw can be regenerated without storing state. The core is the
// splitmix64 finalizer applied to a Weyl sequence.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(derive(seed, stream)) {}

  std::uint64_t next_u64() {
    state_ += kGamma;
    return finalize(state_);
  }

  // Uniform on [0,1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard exponential via inverse CDF.
  double next_exp() { return -std::log(1.0 - next_unit()); }

  // Uniform integer in [0, bound) by multiply-shift; bias < 2^-32.
  std::uint32_t next_below(std::uint32_t bound) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return finalize(finalize(seed ^ 0xa0761d6478bd642fULL) ^ (stream * kGamma + 1));
  }

  std::uint64_t state_;
};

// Uniform point on the probability simplex via exponential spacings.
inline std::vector<double> sample_simplex(int dims, CounterRng& rng) {
  std::vector<double> q(dims);
  double total = 0.0;
  for (int i = 0; i < dims; ++i) {
    q[i] = rng.next_exp();
    total += q[i];
  }
  for (int i = 0; i < dims; ++i) q[i] /= total;
  return q;
}

// Inverse-CDF draw from a pmf given a uniform variate.
inline int sample_letter(std::span<const double> pmf, double u) {
  double cum = 0.0;
  const int last = static_cast<int>(pmf.size()) - 1;
  for (int i = 0; i < last; ++i) {
    cum += pmf[i];
    if (u < cum) return i;
  }
  return last;
}

}  // namespace sflab
