#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sflab/rd_solver.hpp"
#include "sflab/rng.hpp"
#include "support/reference_oracles.hpp"

using namespace sflab;
namespace ref = sflab::testing;

namespace {

DistortionMatrix random_normalized(int k, int j, CounterRng& rng) {
  std::vector<double> entries(static_cast<std::size_t>(k) * j);
  for (auto& e : entries) e = rng.next_unit();
  for (int x = 0; x < k; ++x) {
    double m = entries[x * j];
    for (int y = 1; y < j; ++y) m = std::min(m, entries[x * j + y]);
    for (int y = 0; y < j; ++y) entries[x * j + y] -= m;
  }
  return DistortionMatrix(k, j, std::move(entries));
}

Pmf random_pmf(int k, CounterRng& rng) { return Pmf(sample_simplex(k, rng)); }

}  // namespace

TEST_CASE("F at s = 0 is zero") {
  const auto d = DistortionMatrix::hamming(3);
  CHECK(eval_F(0.0, Qpmf::uniform(3), Pmf::uniform(3), d, 0.3) == doctest::Approx(0.0));
  CHECK(eval_F(0.0, Qpmf({0.2, 0.3, 0.5}), Pmf({0.1, 0.4, 0.5}), d, 0.9) ==
        doctest::Approx(0.0));
}

TEST_CASE("F closed form on the symmetric binary case") {
  const auto d = DistortionMatrix::hamming(2);
  const double expected = -std::log((1.0 + std::exp(-1.0)) / 2.0) - 0.1;
  CHECK(eval_F(1.0, Qpmf::uniform(2), Pmf::uniform(2), d, 0.1) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("F matches the naive double-loop evaluation") {
  CounterRng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 2 + static_cast<int>(rng.next_below(3));
    const int j = 2 + static_cast<int>(rng.next_below(3));
    const auto d = random_normalized(k, j, rng);
    const auto p = random_pmf(k, rng);
    const auto q = Qpmf(sample_simplex(j, rng));
    const double s = 4.0 * rng.next_unit();
    const double level = rng.next_unit();
    const double got = eval_F(s, q, p, d, level);
    const double want = ref::naive_F(s, q.probs(), p.probs(), d, level);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("F stays finite in log domain where linear arithmetic underflows") {
  const DistortionMatrix d(1, 2, {0.0, 1.0});
  const Pmf p({1.0});
  // Inner sum is e^{-s}, below double range for s = 1e4; the log-sum-exp
  // route still returns the exact value s - s*D.
  const double f = eval_F(1e4, Qpmf({0.0, 1.0}), p, d, 0.1);
  CHECK(f == doctest::Approx(1e4 - 1e3).epsilon(1e-12));
  CHECK(std::isfinite(f));
}

TEST_CASE("s0 closed form on the symmetric binary case") {
  const auto d = DistortionMatrix::hamming(2);
  const auto p = Pmf::uniform(2);
  const auto q = Qpmf::uniform(2);
  const double s = solve_s0(q, p, d, 0.25);
  CHECK(s == doctest::Approx(std::log(3.0)).epsilon(1e-8));

  // tilted mean at the root equals D
  CHECK(tilted_distortion_mean(s, q, p, d) == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("s0 is zero at or above D_max(q)") {
  const auto d = DistortionMatrix::hamming(2);
  // D_max(uniform q) = 0.5 for uniform p
  CHECK(solve_s0(Qpmf::uniform(2), Pmf::uniform(2), d, 0.5) == 0.0);
  CHECK(solve_s0(Qpmf::uniform(2), Pmf::uniform(2), d, 0.9) == 0.0);
}

TEST_CASE("s0 monotone in D") {
  const auto d = DistortionMatrix::hamming(2);
  const auto p = Pmf({0.3, 0.7});
  const auto q = Qpmf({0.6, 0.4});
  double prev = solve_s0(q, p, d, 0.05);
  for (double level : {0.1, 0.2, 0.3, 0.4}) {
    const double cur = solve_s0(q, p, d, level);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("s0 infeasible sentinel below the q-reachable minimum") {
  // q supported only on letter 1; row 0 has distortion 1 there, so expected
  // distortion can never drop below p(0).
  const auto d = DistortionMatrix::hamming(2);
  const double s = solve_s0(Qpmf({0.0, 1.0}), Pmf::uniform(2), d, 0.1);
  CHECK(std::isinf(s));
}

TEST_CASE("rd_function matches the binary Hamming closed form") {
  const auto d = DistortionMatrix::hamming(2);
  for (double level : {0.05, 0.1, 0.25, 0.4}) {
    const RdSolution sol = rd_function(Pmf::uniform(2), d, level);
    CHECK(sol.rate == doctest::Approx(ref::binary_hamming_rate(level)).epsilon(1e-8));
    CHECK_FALSE(sol.zero_rate);
    CHECK(sol.q0[0] == doctest::Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("rd_function zero-rate branch") {
  const auto d = DistortionMatrix::hamming(2);
  const RdSolution sol = rd_function(Pmf::uniform(2), d, 0.5);
  CHECK(sol.zero_rate);
  CHECK(sol.rate == 0.0);
  CHECK(sol.s0 == 0.0);
  CHECK(sol.d_max_q0 <= 0.5 + 1e-12);
}

TEST_CASE("rd_function at D = 0 recovers the source entropy") {
  const Pmf p({0.2, 0.3, 0.5});
  const auto d = DistortionMatrix::hamming(3);
  const RdSolution sol = rd_function(p, d, 0.0);
  const double entropy = -(0.2 * std::log(0.2) + 0.3 * std::log(0.3) + 0.5 * std::log(0.5));
  CHECK(sol.rate == doctest::Approx(entropy).epsilon(1e-6));
}

TEST_CASE("rd_function rate equals an independent F evaluation at (s0, q0)") {
  CounterRng rng(73);
  for (int trial = 0; trial < 10; ++trial) {
    const auto d = random_normalized(3, 3, rng);
    if (d.degenerate()) continue;
    const auto p = random_pmf(3, rng);
    const double level = 0.3 * d.d_max();
    const RdSolution sol = rd_function(p, d, level);
    if (sol.zero_rate) continue;
    const double f = ref::naive_F(sol.s0, sol.q0.probs(), p.probs(), d, level);
    CHECK(sol.rate == doctest::Approx(f).epsilon(1e-8));
  }
}

TEST_CASE("rd_function agrees with the Blahut-Arimoto sweep") {
  CounterRng rng(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int k = 2 + static_cast<int>(rng.next_below(2));
    const int j = 2 + static_cast<int>(rng.next_below(2));
    const auto d = random_normalized(k, j, rng);
    if (d.degenerate()) continue;
    const auto p = random_pmf(k, rng);
    const double level = 0.05 + 0.55 * rng.next_unit() * d.d_max();
    const RdSolution sol = rd_function(p, d, level);
    const double oracle = ref::blahut_arimoto_rate(p, d, level);
    CHECK(sol.rate == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(sol.stationarity <= 1e-8);
  }
}

TEST_CASE("rd_function rejects negative distortion") {
  CHECK_THROWS_AS(rd_function(Pmf::uniform(2), DistortionMatrix::hamming(2), -0.1),
                  std::invalid_argument);
}

TEST_CASE("rd_function nonincreasing and convex in D") {
  const auto d = DistortionMatrix::hamming(2);
  const Pmf p({0.35, 0.65});
  const double r1 = rd_function(p, d, 0.10).rate;
  const double r2 = rd_function(p, d, 0.20).rate;
  const double r3 = rd_function(p, d, 0.30).rate;
  CHECK(r1 > r2);
  CHECK(r2 > r3);
  CHECK(r2 <= 0.5 * (r1 + r3) + 1e-10);
}

TEST_CASE("F concave in s and convex in q") {
  CounterRng rng(23);
  const auto d = random_normalized(3, 3, rng);
  const auto p = random_pmf(3, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = Qpmf(sample_simplex(3, rng));
    const double s = 0.2 + 3.0 * rng.next_unit();
    const double h = 1e-4;
    const double second = (eval_F(s + h, q, p, d, 0.2) - 2.0 * eval_F(s, q, p, d, 0.2) +
                           eval_F(s - h, q, p, d, 0.2)) /
                          (h * h);
    CHECK(second <= 1e-9);

    const auto q1 = sample_simplex(3, rng);
    const auto q2 = sample_simplex(3, rng);
    std::vector<double> mid(3);
    for (int i = 0; i < 3; ++i) mid[i] = 0.5 * (q1[i] + q2[i]);
    const double lhs = eval_F(s, Qpmf(mid), p, d, 0.2);
    const double rhs = 0.5 * (eval_F(s, Qpmf(q1), p, d, 0.2) + eval_F(s, Qpmf(q2), p, d, 0.2));
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("curvature: M matches the finite-difference second derivative") {
  const auto d = DistortionMatrix::hamming(2);
  const auto p = Pmf::uniform(2);
  RdSolution sol = rd_function(p, d, 0.25);
  curvature(p, d, 0.25, sol);
  // Symmetric case: tilted mismatch probability is D, so M = D(1-D).
  CHECK(sol.m_s0q0 == doctest::Approx(0.25 * 0.75).epsilon(1e-9));

  const double h = 1e-5;
  const double fd = -(eval_F(sol.s0 + h, sol.q0, p, d, 0.25) -
                      2.0 * eval_F(sol.s0, sol.q0, p, d, 0.25) +
                      eval_F(sol.s0 - h, sol.q0, p, d, 0.25)) /
                    (h * h);
  CHECK(sol.m_s0q0 == doctest::Approx(fd).epsilon(1e-6));
  CHECK(sol.hess_det.has_value());
  CHECK(*sol.hess_det > 0.0);
}

TEST_CASE("curvature: M vanishes when the tilted distortion is constant") {
  // One source letter, both reproductions at distortion 0: variance 0.
  const DistortionMatrix d(1, 2, {0.0, 0.0});
  CHECK(tilted_distortion_var(1.0, Qpmf::uniform(2), Pmf({1.0}), d) ==
        doctest::Approx(0.0));
}

TEST_CASE("curvature: Richardson agreement across Hessian step sizes") {
  CounterRng rng(31);
  const auto d = random_normalized(2, 3, rng);
  const Pmf p({0.45, 0.55});
  const double level = 0.25 * d.d_max();
  RdSolution sol = rd_function(p, d, level);
  if (sol.zero_rate) return;
  bool interior = true;
  for (int y = 0; y < 3; ++y) interior = interior && sol.q0[y] > 1e-3;
  if (!interior) return;
  curvature(p, d, level, sol);
  REQUIRE(sol.hess_det.has_value());
  const double det_h4 = *sol.hess_det;

  // Re-derive with the coarser step via raw finite differences of
  // q -> F(s0(q), q).
  auto g_of = [&](double d0, double d1) {
    std::vector<double> q = sol.q0.probs();
    q[0] += d0;
    q[2] -= d0;
    q[1] += d1;
    q[2] -= d1;
    const Qpmf qq(q);
    const double s0 = solve_s0(qq, p, d, level);
    return eval_F(s0, qq, p, d, level);
  };
  const double h = 1e-3;
  const double g0 = g_of(0, 0);
  const double h00 = (g_of(h, 0) - 2 * g0 + g_of(-h, 0)) / (h * h);
  const double h11 = (g_of(0, h) - 2 * g0 + g_of(0, -h)) / (h * h);
  const double h01 = (g_of(h, h) - g_of(h, -h) - g_of(-h, h) + g_of(-h, -h)) / (4 * h * h);
  const double det_h3 = h00 * h11 - h01 * h01;
  CHECK(det_h4 == doctest::Approx(det_h3).epsilon(1e-3));
}

TEST_CASE("curvature requires a positive-rate solution") {
  const auto d = DistortionMatrix::hamming(2);
  RdSolution sol = rd_function(Pmf::uniform(2), d, 0.75);
  CHECK(sol.zero_rate);
  CHECK_THROWS_AS(curvature(Pmf::uniform(2), d, 0.75, sol), std::invalid_argument);
}
