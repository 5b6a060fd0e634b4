#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

#include "ppl/common.hpp"
#include "ppl/errors.hpp"

namespace ppl::bounds {

enum class Theorem {
  thm1,
  eqstab,
  thm2hp,
  lemma1,
  lemma2,
  lemma3,
  thm4,
  chernoff,
  thm5,
  cor2,
  thm6,
  thm7,
  lemma4,
};

inline std::string theorem_id(Theorem t) {
  switch (t) {
    case Theorem::thm1: return "thm1";
    case Theorem::eqstab: return "eqstab";
    case Theorem::thm2hp: return "thm2hp";
    case Theorem::lemma1: return "lemma1";
    case Theorem::lemma2: return "lemma2";
    case Theorem::lemma3: return "lemma3";
    case Theorem::thm4: return "thm4";
    case Theorem::chernoff: return "chernoff";
    case Theorem::thm5: return "thm5";
    case Theorem::cor2: return "cor2";
    case Theorem::thm6: return "thm6";
    case Theorem::thm7: return "thm7";
    case Theorem::lemma4: return "lemma4";
  }
  return "?";
}

struct BoundValue {
  Theorem id;
  double value = 0.0;
  std::map<std::string, double> inputs;
};

namespace detail {

inline void require(bool cond, const char* msg) {
  if (!cond) throw domain_error(msg);
}

// upper endpoint admitted: the closed forms stay well defined at delta = 1/e
inline void check_delta_e(double delta) {
  require(delta > 0.0 && delta <= 1.0 / std::numbers::e, "delta must lie in (0, 1/e]");
}

inline void check_delta_unit(double delta) {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
}

inline void check_nonneg(double v, const char* msg) { require(v >= 0.0, msg); }

constexpr double e_const = std::numbers::e;

}  // namespace detail

// High-probability generalization for gamma-uniformly-stable algorithms:
// (4-2t)g + e(4M(4-3t) n^{-1/2} sqrt(log(e/d)) + 24 sqrt2 (2-t) g ceil(log2 n) log(e/d)).
inline BoundValue thm1_bound(double gamma, double M, double tau, long n, double delta) {
  detail::check_delta_e(delta);
  detail::require(n >= 2, "thm1: n must be >= 2");
  detail::check_nonneg(gamma, "thm1: gamma must be >= 0");
  detail::check_nonneg(M, "thm1: M must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "thm1: tau must be in [0,1]");
  const double log_ed = std::log(detail::e_const / delta);
  const double c2 = static_cast<double>(ceil_log2(static_cast<std::uint64_t>(n)));
  double value = (4.0 - 2.0 * tau) * gamma +
                 detail::e_const *
                     (4.0 * M * (4.0 - 3.0 * tau) * std::sqrt(log_ed / static_cast<double>(n)) +
                      24.0 * std::sqrt(2.0) * (2.0 - tau) * gamma * c2 * log_ed);
  return {Theorem::thm1, value,
          {{"gamma", gamma}, {"M", M}, {"tau", tau}, {"n", double(n)}, {"delta", delta}}};
}

// Per-run stability value from the recorded indicator sums
// ind_i = Sum_k eta_k I[i_k = k*], ind_j likewise. Loss scale by default
// (2L^2 ...); parameter_scale divides by one L and bounds ||w_T - w'_T||.
inline BoundValue sgd_stability_rhs(double ind_i, double ind_j, double L, double tau,
                                    bool parameter_scale = false) {
  detail::check_nonneg(ind_i, "eqstab: indicator sums must be >= 0");
  detail::check_nonneg(ind_j, "eqstab: indicator sums must be >= 0");
  detail::check_nonneg(L, "eqstab: L must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "eqstab: tau must be in [0,1]");
  double scale = parameter_scale ? 2.0 * L : 2.0 * L * L;
  double value = scale * ind_i + scale * (1.0 - tau) * ind_j;
  return {Theorem::eqstab, value,
          {{"ind_i", ind_i}, {"ind_j", ind_j}, {"L", L}, {"tau", tau},
           {"parameter_scale", parameter_scale ? 1.0 : 0.0}}};
}

// High-probability parameter drift of coupled SGD with constant step eta:
// 2 L eta (2-t) ( t/n + log(1/d) + sqrt(2 t log(1/d) / n) ).
inline BoundValue sgd_drift_highprob(double L, double eta, double tau, long t, long n,
                                     double delta) {
  detail::check_delta_e(delta);
  detail::require(n >= 1 && t >= 0, "thm2hp: need n >= 1, t >= 0");
  detail::check_nonneg(L, "thm2hp: L must be >= 0");
  detail::require(eta > 0.0, "thm2hp: eta must be > 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "thm2hp: tau must be in [0,1]");
  const double log_d = std::log(1.0 / delta);
  const double tt = static_cast<double>(t), nn = static_cast<double>(n);
  double value = 2.0 * L * eta * (2.0 - tau) *
                 (tt / nn + log_d + std::sqrt(2.0 * tt * log_d / nn));
  return {Theorem::thm2hp, value,
          {{"L", L}, {"eta", eta}, {"tau", tau}, {"t", tt}, {"n", nn}, {"delta", delta}}};
}

// Uniform stability of RRM with sigma-strongly-convex objective: 4L^2(2-t)/(n sigma).
inline BoundValue rrm_stability_const(double L, double sigma, double tau, long n) {
  detail::require(sigma > 0.0, "lemma1: sigma must be > 0");
  detail::require(n >= 1, "lemma1: n must be >= 1");
  detail::check_nonneg(L, "lemma1: L must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "lemma1: tau must be in [0,1]");
  double value = 4.0 * L * L * (2.0 - tau) / (static_cast<double>(n) * sigma);
  return {Theorem::lemma1, value,
          {{"L", L}, {"sigma", sigma}, {"tau", tau}, {"n", double(n)}}};
}

// E||A(S) - w*||^2 <= 4 gamma (2 - tau) / sigma.
inline BoundValue lemma2_bound(double gamma, double tau, double sigma) {
  detail::require(sigma > 0.0, "lemma2: sigma must be > 0");
  detail::check_nonneg(gamma, "lemma2: gamma must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "lemma2: tau must be in [0,1]");
  double value = 4.0 * gamma * (2.0 - tau) / sigma;
  return {Theorem::lemma2, value, {{"gamma", gamma}, {"tau", tau}, {"sigma", sigma}}};
}

// Mixed Bernstein deviation at a fixed parameter; floors are exact integer ops.
inline BoundValue bernstein_mixed_bound(double b, double theta, double tau, long n,
                                        double delta) {
  detail::check_delta_unit(delta);
  detail::require(n >= 2, "lemma3: n must be >= 2");
  detail::check_nonneg(b, "lemma3: b must be >= 0");
  detail::check_nonneg(theta, "lemma3: theta must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "lemma3: tau must be in [0,1]");
  const double log_d = std::log(1.0 / delta);
  const double half = static_cast<double>(n / 2);  // floor(n/2)
  const double nn = static_cast<double>(n);
  double value = 2.0 * (1.0 - tau) * b * log_d / (3.0 * half) +
                 2.0 * tau * b * log_d / (3.0 * nn) +
                 (1.0 - tau) * std::sqrt(2.0 * theta * log_d / half) +
                 tau * std::sqrt(2.0 * theta * log_d / nn);
  return {Theorem::lemma3, value,
          {{"b", b}, {"theta", theta}, {"tau", tau}, {"n", nn}, {"delta", delta}}};
}

// RRM generalization: Bernstein part plus the stability terms with
// gamma = 4L^2(2-t)/(n sigma) substituted into the thm1 shape.
inline BoundValue thm4_bound(double b, double theta, double L, double sigma, double tau,
                             long n, double delta) {
  detail::check_delta_e(delta);
  detail::require(sigma > 0.0, "thm4: sigma must be > 0");
  detail::require(n >= 2, "thm4: n must be >= 2");
  detail::check_nonneg(b, "thm4: b must be >= 0");
  detail::check_nonneg(theta, "thm4: theta must be >= 0");
  detail::check_nonneg(L, "thm4: L must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "thm4: tau must be in [0,1]");
  const double log_d = std::log(1.0 / delta);
  const double log_ed = std::log(detail::e_const / delta);
  const double nn = static_cast<double>(n);
  const double c2 = static_cast<double>(ceil_log2(static_cast<std::uint64_t>(n)));
  const double ls = L * L / (nn * sigma);
  double value = 2.0 * b * log_d / (3.0 * nn) + std::sqrt(2.0 * theta * log_d / nn) +
                 8.0 * ls * sqr(2.0 - tau) +
                 detail::e_const *
                     (16.0 * ls * (2.0 - tau) * (4.0 - 3.0 * tau) * std::sqrt(log_ed) +
                      96.0 * std::sqrt(2.0) * ls * sqr(2.0 - tau) * c2 * log_ed);
  return {Theorem::thm4, value,
          {{"b", b}, {"theta", theta}, {"L", L}, {"sigma", sigma}, {"tau", tau},
           {"n", nn}, {"delta", delta}}};
}

// Binomial-sum tail: X <= mu + log(1/d) + sqrt(2 mu log(1/d)) w.p. >= 1-d.
inline BoundValue chernoff_tail(double mu, double delta) {
  detail::check_delta_unit(delta);
  detail::check_nonneg(mu, "chernoff: mu must be >= 0");
  const double log_d = std::log(1.0 / delta);
  double value = mu + log_d + std::sqrt(2.0 * mu * log_d);
  return {Theorem::chernoff, value, {{"mu", mu}, {"delta", delta}}};
}

// On-average loss stability: E[Gen] <= max(v_point, v_pair).
inline BoundValue thm5_relation(double v_point, double v_pair) {
  double value = std::max(v_point, v_pair);
  return {Theorem::thm5, value, {{"v_point", v_point}, {"v_pair", v_pair}}};
}

// l1 argument-stability variant: E[Gen] <= L * max(h1_point, h1_pair).
inline BoundValue cor2_relation(double L, double h1_point, double h1_pair) {
  detail::check_nonneg(L, "cor2: L must be >= 0");
  double value = L * std::max(h1_point, h1_pair);
  return {Theorem::cor2, value, {{"L", L}, {"h1_point", h1_point}, {"h1_pair", h1_pair}}};
}

// l2 argument stability: (b/g)(t E_p + (1-t) E_q) + (b+eps) g (2 - 3t/2).
// minimize_eps returns the eps->0 infimum (valid: an infimum of upper bounds).
inline BoundValue thm6_bound(double beta, double gamma, double epsilon, double tau,
                             double emp_point, double emp_pair,
                             bool minimize_eps = false) {
  detail::require(gamma > 0.0, "thm6: gamma must be > 0");
  detail::require(minimize_eps || epsilon > 0.0, "thm6: epsilon must be > 0");
  detail::check_nonneg(beta, "thm6: beta must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "thm6: tau must be in [0,1]");
  detail::check_nonneg(emp_point, "thm6: empirical risks must be >= 0");
  detail::check_nonneg(emp_pair, "thm6: empirical risks must be >= 0");
  double eps = minimize_eps ? 0.0 : epsilon;
  double mix = tau * emp_point + (1.0 - tau) * emp_pair;
  double value = beta / gamma * mix + (beta + eps) * gamma * (2.0 - 1.5 * tau);
  return {Theorem::thm6, value,
          {{"beta", beta}, {"gamma", gamma}, {"epsilon", eps}, {"tau", tau},
           {"emp_point", emp_point}, {"emp_pair", emp_pair}}};
}

struct Thm7Value {
  BoundValue bound;
  bool precondition_ok = true;  // beta <= sigma n / (4 (2 - tau))
};

inline Thm7Value thm7_bound(double beta, double sigma, double epsilon, double tau,
                            long n, double emp_point, double emp_pair) {
  detail::require(sigma > 0.0, "thm7: sigma must be > 0");
  detail::require(n >= 1, "thm7: n must be >= 1");
  detail::require(epsilon > 0.0, "thm7: epsilon must be > 0");
  detail::check_nonneg(beta, "thm7: beta must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "thm7: tau must be in [0,1]");
  detail::check_nonneg(emp_point, "thm7: empirical risks must be >= 0");
  detail::check_nonneg(emp_pair, "thm7: empirical risks must be >= 0");
  const double nn = static_cast<double>(n);
  const double coef = 2.0 - 1.5 * tau;
  double value = beta * tau * emp_point / epsilon + beta * (1.0 - tau) * emp_pair / epsilon +
                 384.0 * tau * tau * (epsilon + beta) * beta / (sigma * sigma * nn * nn) *
                     coef * emp_point +
                 768.0 * sqr(1.0 - tau) * (epsilon + beta) * beta /
                     (sigma * sigma * nn * nn) * coef * emp_pair;
  Thm7Value out;
  out.bound = {Theorem::thm7, value,
               {{"beta", beta}, {"sigma", sigma}, {"epsilon", epsilon}, {"tau", tau},
                {"n", nn}, {"emp_point", emp_point}, {"emp_pair", emp_pair}}};
  out.precondition_ok = beta <= sigma * nn / (4.0 * (2.0 - tau));
  return out;
}

// Expected-gap bound from smoothness and the mean squared parameter drift
// (1/n) Sum_i E||A(S_i) - A(S)||^2 (the h2^2 estimate).
inline BoundValue lemma4_rhs(double beta, double epsilon, double tau, double emp_point,
                             double emp_pair, double mean_sq_drift) {
  detail::require(epsilon > 0.0, "lemma4: epsilon must be > 0");
  detail::check_nonneg(beta, "lemma4: beta must be >= 0");
  detail::require(tau >= 0.0 && tau <= 1.0, "lemma4: tau must be in [0,1]");
  detail::check_nonneg(emp_point, "lemma4: empirical risks must be >= 0");
  detail::check_nonneg(emp_pair, "lemma4: empirical risks must be >= 0");
  detail::check_nonneg(mean_sq_drift, "lemma4: mean_sq_drift must be >= 0");
  double value = beta * tau * emp_point / epsilon + beta * (1.0 - tau) * emp_pair / epsilon +
                 (epsilon + beta) * (2.0 - 1.5 * tau) * mean_sq_drift;
  return {Theorem::lemma4, value,
          {{"beta", beta}, {"epsilon", epsilon}, {"tau", tau}, {"emp_point", emp_point},
           {"emp_pair", emp_pair}, {"mean_sq_drift", mean_sq_drift}}};
}

}  // namespace ppl::bounds
