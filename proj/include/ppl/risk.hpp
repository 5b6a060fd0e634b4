#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ppl/common.hpp"
#include "ppl/dataset.hpp"
#include "ppl/errors.hpp"
#include "ppl/loss.hpp"

namespace ppl {

enum class RegKind { l2, elastic };

// r(w) = sigma_r/2 ‖w‖₂²  (+ lambda2 ‖w‖₁ for elastic)
struct Regularizer {
  RegKind kind = RegKind::l2;
  double sigma_r = 0.0;
  double lambda2 = 0.0;

  static Regularizer l2(double sigma) {
    Regularizer r;
    r.kind = RegKind::l2;
    r.sigma_r = sigma;
    r.validate();
    return r;
  }

  static Regularizer elastic(double sigma, double lambda2) {
    Regularizer r;
    r.kind = RegKind::elastic;
    r.sigma_r = sigma;
    r.lambda2 = lambda2;
    r.validate();
    return r;
  }

  void validate() const {
    if (!(sigma_r >= 0.0) || !std::isfinite(sigma_r))
      throw invalid_config_error("regularizer: sigma_r must be finite and >= 0");
    if (!(lambda2 >= 0.0) || !std::isfinite(lambda2))
      throw invalid_config_error("regularizer: lambda2 must be finite and >= 0");
    if (kind == RegKind::l2 && lambda2 != 0.0)
      throw invalid_config_error("regularizer: l2 kind cannot carry lambda2");
  }

  double value(const Vec& w) const {
    double v = 0.5 * sigma_r * w.squaredNorm();
    if (kind == RegKind::elastic) v += lambda2 * w.lpNorm<1>();
    return v;
  }

  Vec grad_smooth(const Vec& w) const { return sigma_r * w; }
};

struct RiskReport {
  double tau = 0.0;
  double r_point_emp = 0.0;
  double r_pair_emp = 0.0;
  double r_mixed_emp = 0.0;
  double r_mixed_pop_estimate = std::numeric_limits<double>::quiet_NaN();
  double pop_std_error = std::numeric_limits<double>::quiet_NaN();
  long n_pop = 0;
};

inline double pointwise_empirical_risk(const Dataset& S, const PointwiseLoss& f,
                                       const Vec& w) {
  if (S.empty()) throw insufficient_data_error("pointwise risk: empty dataset");
  detail::check_eval_inputs(w, S[0]);
  double acc = 0.0;
  for (const Sample& z : S) acc += f.value_unchecked(w, z);
  return acc / static_cast<double>(S.size());
}

// Ordered-pair average over i != j with denominator n(n-1).
inline double pairwise_empirical_risk_naive(const Dataset& S, const PairwiseLoss& g,
                                            const Vec& w) {
  const std::size_t n = S.size();
  if (n < 2) throw insufficient_data_error("pairwise risk: needs n >= 2");
  detail::check_eval_inputs(w, S[0]);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) acc += g.value_unchecked(w, S[i], S[j]);
  return acc / (static_cast<double>(n) * static_cast<double>(n - 1));
}

namespace detail {

// Squared-ranking pairwise risk collapses to residual moments:
// with r_i = y_i - w.x_i, sum_{i!=j} (r_i - r_j)^2 = 2n*Sum r^2 - 2(Sum r)^2.
struct ResidualMoments {
  double sum_r = 0.0;
  double sum_r2 = 0.0;
  Vec sum_x;
  Vec sum_rx;
};

inline ResidualMoments residual_moments(const Dataset& S, const Vec& w) {
  ResidualMoments m;
  m.sum_x = Vec::Zero(S.dim());
  m.sum_rx = Vec::Zero(S.dim());
  for (const Sample& z : S) {
    double r = z.y - w.dot(z.x);
    m.sum_r += r;
    m.sum_r2 += r * r;
    m.sum_x += z.x;
    m.sum_rx += r * z.x;
  }
  return m;
}

inline double squared_ranking_risk_from_moments(const ResidualMoments& m, std::size_t n) {
  double nn = static_cast<double>(n);
  return (2.0 * nn * m.sum_r2 - 2.0 * m.sum_r * m.sum_r) / (nn * (nn - 1.0));
}

inline Vec squared_ranking_grad_from_moments(const ResidualMoments& m, std::size_t n) {
  double nn = static_cast<double>(n);
  return (4.0 / (nn * (nn - 1.0))) * (m.sum_r * m.sum_x - nn * m.sum_rx);
}

}  // namespace detail

inline double pairwise_empirical_risk(const Dataset& S, const PairwiseLoss& g,
                                      const Vec& w) {
  if (g.kind() == PairwiseKind::squared_ranking) {
    if (S.size() < 2) throw insufficient_data_error("pairwise risk: needs n >= 2");
    detail::check_eval_inputs(w, S[0]);
    return detail::squared_ranking_risk_from_moments(detail::residual_moments(S, w),
                                                     S.size());
  }
  return pairwise_empirical_risk_naive(S, g, w);
}

inline RiskReport empirical_mixed_risk(const Dataset& S, const MixedLoss& m,
                                       const Vec& w) {
  if (S.empty()) throw insufficient_data_error("empirical risk: empty dataset");
  if (S.size() < 2 && m.tau() < 1.0)
    throw insufficient_data_error("empirical risk: pairwise part needs n >= 2");
  RiskReport rep;
  rep.tau = m.tau();
  rep.r_point_emp = pointwise_empirical_risk(S, m.pointwise(), w);
  rep.r_pair_emp = S.size() >= 2 ? pairwise_empirical_risk(S, m.pairwise(), w) : 0.0;
  rep.r_mixed_emp = m.tau() * rep.r_point_emp + (1.0 - m.tau()) * rep.r_pair_emp;
  return rep;
}

inline double regularized_objective(const Dataset& S, const MixedLoss& m, const Vec& w,
                                    const Regularizer& reg) {
  return empirical_mixed_risk(S, m, w).r_mixed_emp + reg.value(w);
}

// Value and gradient of the mixed empirical risk in one pass. O(nd) when the
// pairwise part is squared-ranking, O(n²d) otherwise.
inline double mixed_risk_value_grad(const Dataset& S, const MixedLoss& m, const Vec& w,
                                    Vec& grad) {
  const std::size_t n = S.size();
  const double tau = m.tau();
  if (n == 0) throw insufficient_data_error("mixed risk: empty dataset");
  if (n < 2 && tau < 1.0)
    throw insufficient_data_error("mixed risk: pairwise part needs n >= 2");
  detail::check_eval_inputs(w, S[0]);

  double value = 0.0;
  grad = Vec::Zero(S.dim());

  const bool fast_pair =
      m.pairwise().kind() == PairwiseKind::squared_ranking &&
      (tau < 1.0 || m.pointwise().kind() == PointwiseKind::squared);
  if (fast_pair) {
    detail::ResidualMoments mom = detail::residual_moments(S, w);
    double nn = static_cast<double>(n);
    if (tau > 0.0) {
      if (m.pointwise().kind() == PointwiseKind::squared) {
        value += tau * mom.sum_r2 / nn;
        grad += (tau * -2.0 / nn) * mom.sum_rx;
      } else {
        Vec pg = Vec::Zero(S.dim());
        double pv = 0.0;
        Vec tmp;
        for (const Sample& z : S) {
          pv += m.pointwise().value_grad_unchecked(w, z, tmp);
          pg += tmp;
        }
        value += tau * pv / nn;
        grad += (tau / nn) * pg;
      }
    }
    if (tau < 1.0) {
      value += (1.0 - tau) * detail::squared_ranking_risk_from_moments(mom, n);
      grad += (1.0 - tau) * detail::squared_ranking_grad_from_moments(mom, n);
    }
    return value;
  }

  Vec tmp;
  if (tau > 0.0) {
    double pv = 0.0;
    Vec pg = Vec::Zero(S.dim());
    for (const Sample& z : S) {
      pv += m.pointwise().value_grad_unchecked(w, z, tmp);
      pg += tmp;
    }
    value += tau * pv / static_cast<double>(n);
    grad += (tau / static_cast<double>(n)) * pg;
  }
  if (tau < 1.0) {
    double pv = 0.0;
    Vec pg = Vec::Zero(S.dim());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) {
          pv += m.pairwise().value_grad_unchecked(w, S[i], S[j], tmp);
          pg += tmp;
        }
    double denom = static_cast<double>(n) * static_cast<double>(n - 1);
    value += (1.0 - tau) * pv / denom;
    grad += ((1.0 - tau) / denom) * pg;
  }
  return value;
}

struct PopEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long n_pop = 0;
};

// Evaluate the mixed risk on a given population sample. The error bar comes
// from i.i.d. super-draws: consecutive disjoint pairs (z_{2m}, z_{2m+1}),
// each contributing tau*(f(z_2m)+f(z_2m+1))/2 + (1-tau)*g(z_2m, z_2m+1).
inline PopEstimate population_risk_on(const Dataset& pop, const MixedLoss& m,
                                      const Vec& w) {
  if (pop.size() < 2) throw insufficient_data_error("population risk: needs n >= 2");
  PopEstimate out;
  out.n_pop = static_cast<long>(pop.size());
  out.estimate = empirical_mixed_risk(pop, m, w).r_mixed_emp;
  const std::size_t pairs = pop.size() / 2;
  std::vector<double> u;
  u.reserve(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    const Sample& a = pop[2 * k];
    const Sample& b = pop[2 * k + 1];
    double point = 0.5 * (m.pointwise().value_unchecked(w, a) +
                          m.pointwise().value_unchecked(w, b));
    double pair = m.pairwise().value_unchecked(w, a, b);
    u.push_back(m.tau() * point + (1.0 - m.tau()) * pair);
  }
  out.std_error = pairs >= 2 ? sample_std(u) / std::sqrt(static_cast<double>(pairs)) : 0.0;
  return out;
}

inline PopEstimate population_risk_mc(const SyntheticGenerator& gen, const MixedLoss& m,
                                      const Vec& w, long n_pop, std::uint64_t seed) {
  if (n_pop < 2) throw insufficient_data_error("population_risk_mc: n_pop must be >= 2");
  SyntheticGenerator fresh = gen;
  fresh.seed = seed;
  return population_risk_on(sample_synthetic(fresh, n_pop), m, w);
}

// Signed gap: population minus empirical; positive means the model does worse
// on the population than on its training set.
inline double generalization_gap(const Dataset& S, const MixedLoss& m, const Vec& w,
                                 const SyntheticGenerator& gen, long n_pop,
                                 std::uint64_t seed) {
  PopEstimate pop = population_risk_mc(gen, m, w, n_pop, seed);
  return pop.estimate - empirical_mixed_risk(S, m, w).r_mixed_emp;
}

}  // namespace ppl
