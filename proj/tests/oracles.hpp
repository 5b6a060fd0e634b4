#pragma once

// Test-side oracles, kept independent of the library paths they check.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ppl/common.hpp"
#include "ppl/dataset.hpp"
#include "ppl/loss.hpp"

namespace oracles {

using ppl::Vec;

// Three-point central difference gradient of a scalar function of w.
template <class F>
Vec fd_gradient(F&& f, const Vec& w, double h = 1e-6) {
  Vec g(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    Vec wp = w, wm = w;
    wp[k] += h;
    wm[k] -= h;
    g[k] = (f(wp) - f(wm)) / (2.0 * h);
  }
  return g;
}

inline double grad_rel_error(const Vec& analytic, const Vec& numeric) {
  double denom = std::max(1.0, std::max(analytic.norm(), numeric.norm()));
  return (analytic - numeric).norm() / denom;
}

// Ordered-pair double loop written against the loss evaluator directly; the
// library's vectorized pairwise risk is checked against this.
inline double pair_loop_risk(const ppl::Dataset& S, const ppl::PairwiseLoss& g,
                             const Vec& w) {
  double acc = 0.0;
  const std::size_t n = S.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) acc += g.value(w, S[i], S[j]);
  return acc / (double(n) * double(n - 1));
}

// E[x^2] for the scalar clamped-normal feature: x_raw ~ N(0,1) truncated to
// [-X, X] with the overflow mass collapsed onto the endpoints.
inline double clamped_normal_second_moment(double X) {
  double in_ball = std::erf(X / std::sqrt(2.0)) -
                   X * std::sqrt(2.0 / M_PI) * std::exp(-X * X / 2.0);
  double atom = X * X * std::erfc(X / std::sqrt(2.0));
  return in_ball + atom;
}

inline ppl::Sample scalar_sample(double x, double y) {
  ppl::Sample z;
  z.x = Vec::Constant(1, x);
  z.y = y;
  return z;
}

inline ppl::Dataset scalar_dataset(const std::vector<std::pair<double, double>>& xy) {
  std::vector<ppl::Sample> samples;
  for (auto [x, y] : xy) samples.push_back(scalar_sample(x, y));
  return ppl::Dataset(std::move(samples), "test");
}

}  // namespace oracles
