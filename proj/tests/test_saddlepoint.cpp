#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sflab/exact_oracle.hpp"
#include "sflab/numeric.hpp"
#include "sflab/saddlepoint.hpp"

using namespace sflab;

namespace {

SourceBlock uniform_type_block(int n) {
  std::vector<int> syms(n);
  for (int i = 0; i < n; ++i) syms[i] = i % 2;
  return SourceBlock(std::move(syms), 2);
}

}  // namespace

TEST_CASE("k_n limit and direct substitutions") {
  // Delta -> 0 limit: 1 / (s sqrt(2 pi M)).
  CHECK(k_n(1.0, 1.0, 0.0, 12.3) ==
        doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-12));
  // Delta = 1, integer nD: mod term vanishes.
  const double expect = 1.0 / ((1.0 - std::exp(-1.0)) * std::sqrt(2.0 * kPi));
  CHECK(k_n(1.0, 1.0, 1.0, 64.0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(0.63112).epsilon(1e-4));
  // Half-integer nD scales by e^{-1/2}.
  CHECK(k_n(1.0, 1.0, 1.0, 64.5) ==
        doctest::Approx(expect * std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("k_n oscillation bounds") {
  const double s = 0.8, m = 0.4, delta = 0.5;
  const double hi = delta / ((1.0 - std::exp(-s * delta)) * std::sqrt(2.0 * kPi * m));
  const double lo = hi * std::exp(-s * delta);
  for (double nd = 10.0; nd < 12.0; nd += 0.0137) {
    const double v = k_n(s, m, delta, nd);
    CHECK(v <= hi * (1.0 + 1e-12));
    CHECK(v >= lo * (1.0 - 1e-12));
  }
}

TEST_CASE("k_n continuity as delta -> 0") {
  // The deviation from the limit is first order in delta (bounded by
  // s*delta), so it shrinks tenfold per step and lands within 1e-6
  // relative at delta = 1e-6.
  const double s = 1.3, m = 0.7, nd = 16.0;
  const double limit = k_n(s, m, 0.0, nd);
  double prev = 1e9;
  for (int k = 3; k <= 6; ++k) {
    const double delta = std::pow(10.0, -k);
    const double dev = std::abs(k_n(s, m, delta, nd) / limit - 1.0);
    CHECK(dev <= s * delta);
    CHECK(dev < prev);
    prev = dev;
  }
  CHECK(prev <= 1e-6);
}

TEST_CASE("k_n snaps residues next to Delta") {
  // nD arithmetic leaves the residue a hair under Delta; it must snap to 0,
  // not inject a spurious e^{-s Delta} factor.
  const double delta = 0.1;
  const double nd = 0.7 - 1e-12;
  CHECK(k_n(2.0, 1.0, delta, nd) == doctest::Approx(k_n(2.0, 1.0, delta, 0.7)));
}

TEST_CASE("k_n domain errors") {
  CHECK_THROWS_AS(k_n(0.0, 1.0, 1.0, 3.0), std::domain_error);
  CHECK_THROWS_AS(k_n(1.0, 0.0, 1.0, 3.0), std::domain_error);
}

TEST_CASE("zero-rate estimate matches the exact oracle once n is large") {
  // Uniform type under Hamming has D_max(q) = 1/2 for every q, so at D = 0.6
  // the volume constant is exactly 1; the exact tail reaches it as n grows.
  const auto d = DistortionMatrix::hamming(2);
  const auto x = uniform_type_block(512);
  const auto est = success_prob_estimate(x, d, 0.6, 11, 50'000);
  CHECK(est.branch == RateBranch::zero_rate);
  const auto exact = success_exact_dp(x, d, 0.6);
  const double mc_err = est.std_error ? 3.0 * *est.std_error : 0.0;
  CHECK(std::abs(std::exp(est.log_value) - std::exp(exact.log_value)) <= mc_err + 0.05);
}

TEST_CASE("zero-rate estimate: sphere covering everything gives probability 1") {
  const auto d = DistortionMatrix::hamming(2);
  const auto x = uniform_type_block(16);
  const auto est = success_prob_estimate(x, d, 1.0, 99, 20'000);
  CHECK(est.branch == RateBranch::zero_rate);
  CHECK(est.log_value == doctest::Approx(0.0));
}

TEST_CASE("positive-rate estimate matches exact dp within the expected band") {
  const auto d = DistortionMatrix::hamming(2);
  const auto x = uniform_type_block(64);
  const auto est = success_prob_estimate(x, d, 0.25);
  const auto exact = success_exact_dp(x, d, 0.25);
  CHECK(est.branch == RateBranch::positive_rate);
  REQUIRE(est.components.has_value());
  // ratio in [0.7, 1.4]
  const double log_ratio = est.log_value - exact.log_value;
  CHECK(log_ratio > std::log(0.7));
  CHECK(log_ratio < std::log(1.4));
  // components reconstruct log_value exactly
  const auto& c = *est.components;
  CHECK(est.log_value == -(c.rate_term + c.poly_term - c.const_term));
}

TEST_CASE("estimate dominant term: (-log P - nR)/ln n approaches J/2") {
  const auto d = DistortionMatrix::hamming(2);
  double prev_gap = 1e9;
  for (int n : {32, 64, 128, 256}) {
    const auto x = uniform_type_block(n);
    const auto exact = success_exact_dp(x, d, 0.25);
    const RdSolution sol = rd_function(empirical(x), d, 0.25);
    const double slope =
        (-exact.log_value - n * sol.rate) / std::log(static_cast<double>(n));
    const double gap = std::abs(slope - 1.0);  // J/2 = 1
    CHECK(gap < prev_gap + 0.05);  // tightening with n, small wiggle allowed
    prev_gap = gap;
    if (n == 256) CHECK(gap <= 0.3);
  }
}

TEST_CASE("estimate depends on x only through its type (bit identical)") {
  const auto d = DistortionMatrix::hamming(2);
  const SourceBlock a({0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2);
  const SourceBlock b({1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0}, 2);
  const auto ea = success_prob_estimate(a, d, 0.25, 5);
  const auto eb = success_prob_estimate(b, d, 0.25, 5);
  CHECK(ea.log_value == eb.log_value);
}

TEST_CASE("per-q estimate: probability ~1 above D_max(q), error at equality") {
  const auto d = DistortionMatrix::hamming(2);
  const auto x = uniform_type_block(32);
  const Qpmf q({0.5, 0.5});
  // D_max(q) = 0.5 for the uniform type.
  const auto above = success_prob_given_q(x, d, 0.7, q);
  CHECK(above.log_value == 0.0);
  CHECK(above.branch == RateBranch::zero_rate);
  CHECK_THROWS_AS(success_prob_given_q(x, d, 0.5, q), std::domain_error);
}

TEST_CASE("per-q estimate vs per-q convolution oracle") {
  const auto d = DistortionMatrix::hamming(2);
  const auto x = uniform_type_block(32);
  const Qpmf q({0.5, 0.5});
  const auto est = success_prob_given_q(x, d, 0.25, q);
  const auto exact = success_given_q_convolution(x, d, 0.25, q);
  const double log_ratio = est.log_value - exact.log_value;
  CHECK(log_ratio > std::log(0.8));
  CHECK(log_ratio < std::log(1.25));
}

TEST_CASE("per-q estimate scaling: doubling n squares the exponential factor") {
  const auto d = DistortionMatrix::hamming(2);
  const Qpmf q({0.5, 0.5});
  const auto x32 = uniform_type_block(32);
  const auto x64 = uniform_type_block(64);
  const double l32 = success_prob_given_q(x32, d, 0.25, q).log_value;
  const double l64 = success_prob_given_q(x64, d, 0.25, q).log_value;
  // log P(2n) - 2 log P(n) = O(ln n): here it is exactly
  // log K_n - 0.5 log(2n) - (log K_n^2 / n) terms; just check the band.
  CHECK(std::abs(l64 - 2.0 * l32) < 2.0 * std::log(64.0));
}

TEST_CASE("simplex volume fraction: full and empty regions") {
  double se = 0.0;
  // Column costs both 0.4: every q has expected cost 0.4.
  CHECK(simplex_volume_fraction({0.4, 0.4}, 0.5, 10'000, 3, &se) == 1.0);
  CHECK(simplex_volume_fraction({0.4, 0.4}, 0.3, 10'000, 3, &se) == 0.0);
  // Linear cost q1: region q1 <= 0.25 has volume 1/4 for J = 2.
  const double frac = simplex_volume_fraction({0.0, 1.0}, 0.25, 200'000, 3, &se);
  CHECK(frac == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("saddle/exact log ratio shrinks as n doubles") {
  const auto d = DistortionMatrix::hamming(2);
  double prev = 1e9;
  for (int n : {16, 32, 64, 128}) {
    const auto x = uniform_type_block(n);
    const double ratio = std::abs(success_prob_estimate(x, d, 0.25).log_value -
                                  success_exact_dp(x, d, 0.25).log_value);
    CHECK(ratio < prev);
    prev = ratio;
  }
  CHECK(prev <= 0.25);  // n = 128
}

TEST_CASE("saddle/exact log ratio obeys a c/sqrt(n) envelope") {
  // c fitted once from the first verified run (1.30 at n = 16) and frozen;
  // the scaled constant ratio * sqrt(n) must also keep shrinking.
  const auto d = DistortionMatrix::hamming(2);
  const double c_frozen = 1.30;
  double prev_scaled = 1e9;
  for (int n : {16, 32, 64, 128}) {
    const auto x = uniform_type_block(n);
    const double ratio = std::abs(success_prob_estimate(x, d, 0.25).log_value -
                                  success_exact_dp(x, d, 0.25).log_value);
    CHECK(ratio <= c_frozen / std::sqrt(static_cast<double>(n)));
    const double scaled = ratio * std::sqrt(static_cast<double>(n));
    CHECK(scaled < prev_scaled);
    prev_scaled = scaled;
  }
}
