#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "ppl/bounds.hpp"

using namespace ppl;
using namespace ppl::bounds;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kE = std::numbers::e;
}

TEST_CASE("integer ceil log2") {
  REQUIRE(ceil_log2(1) == 0);
  REQUIRE(ceil_log2(2) == 1);
  REQUIRE(ceil_log2(3) == 2);
  REQUIRE(ceil_log2(100) == 7);
  REQUIRE(ceil_log2(1024) == 10);
  REQUIRE(ceil_log2(1025) == 11);
  REQUIRE_THROWS_AS(ceil_log2(0), domain_error);
}

TEST_CASE("thm1 closed form") {
  // gamma = 0 collapses the stability terms: e * 4M(4-3tau)/sqrt(n) * sqrt(log(e/d))
  BoundValue v = thm1_bound(0.0, 1.0, 1.0, 100, std::exp(-3.0));
  REQUIRE_THAT(v.value, WithinRel(0.8 * kE, 1e-12));
  REQUIRE(thm1_bound(0.0, 0.0, 0.5, 100, 0.05).value == 0.0);

  SECTION("monotone in gamma") {
    for (double tau : {0.0, 0.5, 1.0}) {
      double prev = -1.0;
      for (double gamma : {0.0, 0.01, 0.1, 1.0, 10.0}) {
        double cur = thm1_bound(gamma, 1.0, tau, 200, 0.05).value;
        REQUIRE(cur >= prev);
        prev = cur;
      }
    }
  }
  SECTION("tau interpolation against the specialized forms") {
    const double g = 0.3, M = 1.7, d = 0.02;
    const long n = 500;
    const double log_ed = std::log(kE / d);
    const double c2 = ceil_log2(n);
    double pointwise = 2 * g + kE * (4 * M / std::sqrt(double(n)) * std::sqrt(log_ed) +
                                     24 * std::sqrt(2.0) * g * c2 * log_ed);
    double pairwise = 4 * g + kE * (16 * M / std::sqrt(double(n)) * std::sqrt(log_ed) +
                                    48 * std::sqrt(2.0) * g * c2 * log_ed);
    REQUIRE_THAT(thm1_bound(g, M, 1.0, n, d).value, WithinRel(pointwise, 1e-14));
    REQUIRE_THAT(thm1_bound(g, M, 0.0, n, d).value, WithinRel(pairwise, 1e-14));
  }
  SECTION("domain checks") {
    REQUIRE_THROWS_AS(thm1_bound(0.1, 1.0, 0.5, 100, 0.5), domain_error);
    REQUIRE_THROWS_AS(thm1_bound(0.1, 1.0, 0.5, 1, 0.05), domain_error);
    REQUIRE_THROWS_AS(thm1_bound(-0.1, 1.0, 0.5, 100, 0.05), domain_error);
  }
}

TEST_CASE("per-run stability rhs") {
  REQUIRE(sgd_stability_rhs(0, 0, 3.0, 0.5).value == 0.0);
  // tau = 1 makes the value independent of the j indicator
  REQUIRE(sgd_stability_rhs(0.2, 0.4, 3.0, 1.0).value ==
          sgd_stability_rhs(0.2, 99.0, 3.0, 1.0).value);
  REQUIRE_THAT(sgd_stability_rhs(0.05, 0.05, 1.0, 0.0).value, WithinRel(0.2, 1e-14));
  // parameter scale divides by one L
  REQUIRE_THAT(sgd_stability_rhs(0.05, 0.05, 2.0, 0.0, true).value,
               WithinRel(sgd_stability_rhs(0.05, 0.05, 2.0, 0.0).value / 2.0, 1e-14));
}

TEST_CASE("high-probability drift display") {
  BoundValue v = sgd_drift_highprob(1.0, 0.01, 0.0, 100, 100, std::exp(-1.0));
  REQUIRE_THAT(v.value, WithinRel(0.04 * (2.0 + std::sqrt(2.0)), 1e-12));
  // t = 0 leaves only the log term
  REQUIRE_THAT(sgd_drift_highprob(1.0, 0.01, 0.0, 0, 100, std::exp(-1.0)).value,
               WithinRel(2 * 0.01 * 2 * 1.0, 1e-12));
  // the (2 - tau) prefactor halves between tau = 0 and tau = 1
  REQUIRE_THAT(sgd_drift_highprob(1.0, 0.01, 1.0, 100, 100, 0.05).value,
               WithinRel(sgd_drift_highprob(1.0, 0.01, 0.0, 100, 100, 0.05).value / 2.0,
                         1e-14));
}

TEST_CASE("rrm stability constant") {
  REQUIRE_THAT(rrm_stability_const(1.0, 0.5, 1.0, 100).value, WithinRel(0.08, 1e-14));
  REQUIRE_THAT(rrm_stability_const(1.0, 1.0, 0.0, 50).value,
               WithinRel(2.0 * rrm_stability_const(1.0, 1.0, 1.0, 50).value, 1e-14));
  REQUIRE_THAT(rrm_stability_const(2.0, 0.3, 0.5, 400).value,
               WithinRel(rrm_stability_const(2.0, 0.3, 0.5, 200).value / 2.0, 1e-14));
  REQUIRE_THROWS_AS(rrm_stability_const(1.0, 0.0, 0.5, 10), domain_error);
}

TEST_CASE("lemma2 distance bound") {
  REQUIRE(lemma2_bound(0.0, 0.5, 1.0).value == 0.0);
  REQUIRE_THAT(lemma2_bound(0.1, 0.0, 1.0).value, WithinRel(0.8, 1e-14));
  REQUIRE_THAT(lemma2_bound(0.2, 0.3, 2.0).value,
               WithinRel(2.0 * lemma2_bound(0.1, 0.3, 2.0).value, 1e-14));
}

TEST_CASE("mixed bernstein bound") {
  BoundValue v = bernstein_mixed_bound(1.0, 1.0, 1.0, 100, std::exp(-1.0));
  REQUIRE_THAT(v.value, WithinRel(2.0 / 300.0 + std::sqrt(0.02), 1e-12));
  REQUIRE(bernstein_mixed_bound(0.0, 0.0, 0.3, 10, 0.1).value == 0.0);

  SECTION("odd n uses the literal floor") {
    const double b = 1.0, th = 0.5, tau = 0.25, d = 0.1;
    const double log_d = std::log(1.0 / d);
    double expected = 2 * (1 - tau) * b * log_d / (3.0 * 2.0) +
                      2 * tau * b * log_d / (3.0 * 5.0) +
                      (1 - tau) * std::sqrt(2 * th * log_d / 2.0) +
                      tau * std::sqrt(2 * th * log_d / 5.0);
    REQUIRE_THAT(bernstein_mixed_bound(b, th, tau, 5, d).value,
                 WithinRel(expected, 1e-14));
  }
}

TEST_CASE("thm4 closed form") {
  // L = 0 reduces to the Bernstein part
  REQUIRE_THAT(thm4_bound(1.0, 1.0, 0.0, 1.0, 1.0, 100, 0.05).value,
               WithinRel(2.0 * std::log(20.0) / 300.0 +
                             std::sqrt(2.0 * std::log(20.0) / 100.0),
                         1e-12));

  SECTION("two independent evaluations of the stability part") {
    // b = theta = 0, tau = 1, L = 1, sigma = 1, n = 10, delta = e^-3
    double value = thm4_bound(0.0, 0.0, 1.0, 1.0, 1.0, 10, std::exp(-3.0)).value;
    double log_ed = 4.0;  // log(e / e^-3)
    double lit = 8.0 / 10.0 +
                 kE * (16.0 / 10.0 * 1.0 * std::sqrt(log_ed) +
                       96.0 * std::sqrt(2.0) / 10.0 * 4.0 * log_ed);
    REQUIRE_THAT(value, WithinRel(lit, 1e-12));
  }
  SECTION("nonincreasing in n") {
    double prev = std::numeric_limits<double>::infinity();
    for (long n : {10L, 30L, 100L, 300L, 1000L, 3000L, 10000L}) {
      double cur = thm4_bound(1.0, 0.5, 2.0, 0.7, 0.4, n, 0.05).value;
      REQUIRE(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("chernoff tail") {
  REQUIRE_THAT(chernoff_tail(2.0, std::exp(-1.0)).value, WithinRel(5.0, 1e-14));
  REQUIRE_THAT(chernoff_tail(0.0, 0.05).value, WithinRel(std::log(20.0), 1e-14));
  // delta -> 1 leaves only mu
  REQUIRE_THAT(chernoff_tail(3.0, 1.0 - 1e-12).value, WithinAbs(3.0, 1e-5));
  REQUIRE_THROWS_AS(chernoff_tail(-1.0, 0.5), domain_error);
  REQUIRE_THROWS_AS(chernoff_tail(1.0, 0.0), domain_error);
}

TEST_CASE("thm5 and cor2 relations") {
  REQUIRE(thm5_relation(0.0, 0.0).value == 0.0);
  REQUIRE(thm5_relation(0.1, 0.3).value == 0.3);
  REQUIRE(thm5_relation(-0.2, -0.1).value == -0.1);
  REQUIRE_THAT(cor2_relation(2.0, 0.1, 0.05).value, WithinRel(0.2, 1e-14));
}

TEST_CASE("thm6 closed form and epsilon infimum") {
  // emp = 0: value (beta + eps) gamma (2 - 3 tau / 2)
  REQUIRE_THAT(thm6_bound(1.0, 1.0, 1.0, 1.0, 0.0, 0.0).value, WithinRel(1.0, 1e-14));
  const double c1 = thm6_bound(1.0, 0.5, 0.3, 1.0, 0.2, 0.9).value;
  const double c0 = thm6_bound(1.0, 0.5, 0.3, 0.0, 0.2, 0.9).value;
  REQUIRE_THAT(c1, WithinRel(1.0 / 0.5 * 0.2 + 1.3 * 0.5 * 0.5, 1e-12));
  REQUIRE_THAT(c0, WithinRel(1.0 / 0.5 * 0.9 + 1.3 * 0.5 * 2.0, 1e-12));
  // linear in emp_point at fixed rest
  double a = thm6_bound(1.0, 0.5, 0.3, 0.6, 1.0, 0.0).value;
  double b = thm6_bound(1.0, 0.5, 0.3, 0.6, 2.0, 0.0).value;
  double c = thm6_bound(1.0, 0.5, 0.3, 0.6, 3.0, 0.0).value;
  REQUIRE_THAT(c - b, WithinRel(b - a, 1e-12));
  // infimum mode equals the eps -> 0 limit
  REQUIRE_THAT(thm6_bound(2.0, 0.5, 0.0, 0.4, 0.3, 0.7, true).value,
               WithinRel(2.0 / 0.5 * (0.4 * 0.3 + 0.6 * 0.7) + 2.0 * 0.5 * 1.4, 1e-12));
  REQUIRE_THROWS_AS(thm6_bound(1.0, 0.0, 1.0, 0.5, 0.1, 0.1), domain_error);
  REQUIRE_THROWS_AS(thm6_bound(1.0, 1.0, 0.0, 0.5, 0.1, 0.1), domain_error);
}

TEST_CASE("thm7 closed form and precondition flag") {
  REQUIRE(thm7_bound(1.0, 1.0, 1.0, 0.5, 100, 0.0, 0.0).bound.value == 0.0);
  Thm7Value v = thm7_bound(1.0, 1.0, 1.0, 1.0, 100, 1.0, 0.0);
  REQUIRE_THAT(v.bound.value, WithinRel(1.0384, 1e-12));
  REQUIRE(v.precondition_ok);  // 1 <= 100/4
  // tau = 1 zeroes every pairwise term
  REQUIRE(thm7_bound(1.0, 1.0, 1.0, 1.0, 100, 1.0, 99.0).bound.value ==
          thm7_bound(1.0, 1.0, 1.0, 1.0, 100, 1.0, 0.0).bound.value);
  REQUIRE_FALSE(thm7_bound(10.0, 0.1, 1.0, 0.0, 10, 1.0, 1.0).precondition_ok);
  REQUIRE_THROWS_AS(thm7_bound(1.0, 0.0, 1.0, 0.5, 10, 0.1, 0.1), domain_error);
}

TEST_CASE("lemma4 rhs and its link to thm6") {
  REQUIRE(lemma4_rhs(1.0, 1.0, 0.5, 0.0, 0.0, 0.0).value == 0.0);
  REQUIRE_THAT(lemma4_rhs(1.0, 1.0, 0.0, 0.0, 0.3, 0.01).value,
               WithinRel(0.3 + 2.0 * 2.0 * 0.01, 1e-12));
  // substitution identity: eps' = gamma and drift = gamma^2 reproduce thm6
  // with its epsilon solving (beta + eps) gamma = (gamma + beta) gamma^2
  const double beta = 1.0, gamma = 2.0, tau = 0.3, p = 0.4, q = 0.8;
  const double eps6 = gamma * gamma + beta * gamma - beta;
  REQUIRE_THAT(lemma4_rhs(beta, gamma, tau, p, q, gamma * gamma).value,
               WithinRel(thm6_bound(beta, gamma, eps6, tau, p, q).value, 1e-12));
}

TEST_CASE("bounds are nonnegative on random valid inputs") {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 10000; ++t) {
    double gamma = 10.0 * unit(rng), M = 10.0 * unit(rng), tau = unit(rng);
    double L = 5.0 * unit(rng), sigma = 0.1 + unit(rng), b = 5.0 * unit(rng);
    double theta = 5.0 * unit(rng), eps = 0.1 + unit(rng), beta = 5.0 * unit(rng);
    long n = 2 + long(unit(rng) * 1000);
    double delta = 0.001 + 0.3 * unit(rng);
    REQUIRE(thm1_bound(gamma, M, tau, n, delta).value >= 0.0);
    REQUIRE(sgd_stability_rhs(gamma, M, L, tau).value >= 0.0);
    REQUIRE(sgd_drift_highprob(L, eps, tau, n, n, delta).value >= 0.0);
    REQUIRE(rrm_stability_const(L, sigma, tau, n).value >= 0.0);
    REQUIRE(lemma2_bound(gamma, tau, sigma).value >= 0.0);
    REQUIRE(bernstein_mixed_bound(b, theta, tau, n, delta).value >= 0.0);
    REQUIRE(thm4_bound(b, theta, L, sigma, tau, n, delta).value >= 0.0);
    REQUIRE(chernoff_tail(M, delta).value >= 0.0);
    REQUIRE(thm6_bound(beta, 0.1 + gamma, eps, tau, b, theta).value >= 0.0);
    REQUIRE(thm7_bound(beta, sigma, eps, tau, n, b, theta).bound.value >= 0.0);
    REQUIRE(lemma4_rhs(beta, eps, tau, b, theta, gamma).value >= 0.0);
  }
}

TEST_CASE("thm1 dominates its stability-only term") {
  std::mt19937_64 rng(31459);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    double L = 5.0 * unit(rng), sigma = 0.1 + unit(rng), tau = unit(rng);
    long n = 10 + long(unit(rng) * 500);
    double gamma = rrm_stability_const(L, sigma, tau, n).value;
    double M = 5.0 * unit(rng);
    REQUIRE(thm1_bound(gamma, M, tau, n, 0.05).value >= (4.0 - 2.0 * tau) * gamma);
  }
}
