#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ppl/common.hpp"
#include "ppl/dataset.hpp"
#include "ppl/errors.hpp"

namespace ppl {

enum class PointwiseKind { squared, logistic };
enum class PairwiseKind { squared_ranking, hinge_ranking, link_constraint };

// Lipschitz/smoothness/curvature certificate, valid uniformly over
// {‖w‖₂ ≤ ball_radius, ‖x‖₂ ≤ x_bound, |y| ≤ y_bound}.
struct LossConstants {
  double L = 0.0;
  std::optional<double> beta;  // absent for nonsmooth kinds
  double sigma_cvx = 0.0;
  bool convex = true;
  double ball_radius = 0.0;
  double x_bound = 0.0;
  double y_bound = 0.0;
};

namespace detail {

inline void check_eval_inputs(const Vec& w, const Sample& z) {
  if (w.size() != z.x.size())
    throw invalid_input_error("loss: dimension mismatch between w and sample");
  if (!w.allFinite()) throw numeric_error("loss: non-finite parameter vector");
}

inline void check_ball_args(double B, double X) {
  if (!(B > 0.0) || !(X > 0.0))
    throw invalid_input_error("constants_on_ball: B and X_max must be > 0");
}

}  // namespace detail

class PointwiseLoss {
 public:
  static PointwiseLoss squared() { return PointwiseLoss(PointwiseKind::squared); }
  static PointwiseLoss logistic() { return PointwiseLoss(PointwiseKind::logistic); }

  static PointwiseLoss from_id(const std::string& id) {
    if (id == "squared") return squared();
    if (id == "logistic") return logistic();
    throw invalid_config_error("unknown pointwise loss: " + id);
  }

  PointwiseKind kind() const { return kind_; }

  std::string id() const {
    return kind_ == PointwiseKind::squared ? "squared" : "logistic";
  }

  double value(const Vec& w, const Sample& z) const {
    detail::check_eval_inputs(w, z);
    return value_unchecked(w, z);
  }

  // Returns the value and writes the gradient into grad (resized to dim).
  double value_grad(const Vec& w, const Sample& z, Vec& grad) const {
    detail::check_eval_inputs(w, z);
    return value_grad_unchecked(w, z, grad);
  }

  Vec grad(const Vec& w, const Sample& z) const {
    Vec g;
    value_grad(w, z, g);
    return g;
  }

  double value_unchecked(const Vec& w, const Sample& z) const {
    switch (kind_) {
      case PointwiseKind::squared: {
        double r = w.dot(z.x) - z.y;
        return r * r;
      }
      case PointwiseKind::logistic: {
        // log(1 + exp(-y w.x)), evaluated stably for large margins
        double m = -z.y * w.dot(z.x);
        return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      }
    }
    throw unsupported_error("pointwise loss kind");
  }

  double value_grad_unchecked(const Vec& w, const Sample& z, Vec& grad) const {
    switch (kind_) {
      case PointwiseKind::squared: {
        double r = w.dot(z.x) - z.y;
        grad = 2.0 * r * z.x;
        return r * r;
      }
      case PointwiseKind::logistic: {
        double m = -z.y * w.dot(z.x);
        double s = 1.0 / (1.0 + std::exp(-m));  // sigmoid(m)
        grad = (-z.y * s) * z.x;
        return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
      }
    }
    throw unsupported_error("pointwise loss kind");
  }

  LossConstants constants_on_ball(double B, double X, double Y) const {
    detail::check_ball_args(B, X);
    LossConstants c;
    c.ball_radius = B;
    c.x_bound = X;
    c.y_bound = Y;
    switch (kind_) {
      case PointwiseKind::squared:
        // ‖grad‖ = 2|w.x − y|·‖x‖ ≤ 2(BX+Y)X; Hessian 2xxᵀ has norm ≤ 2X².
        c.L = 2.0 * (B * X + Y) * X;
        c.beta = 2.0 * X * X;
        break;
      case PointwiseKind::logistic:
        // ‖grad‖ ≤ |y|‖x‖ ≤ XY; curvature y²(x xᵀ)s(1−s) ≤ X²Y²/4.
        c.L = X * Y;
        c.beta = X * X * Y * Y / 4.0;
        break;
    }
    return c;
  }

 private:
  explicit PointwiseLoss(PointwiseKind k) : kind_(k) {}
  PointwiseKind kind_;
};

class PairwiseLoss {
 public:
  static PairwiseLoss squared_ranking() {
    return PairwiseLoss(PairwiseKind::squared_ranking, 0.0);
  }

  static PairwiseLoss hinge_ranking() {
    return PairwiseLoss(PairwiseKind::hinge_ranking, 0.0);
  }

  // Quadratic must-link/cannot-link penalty: same-label pairs are penalized
  // by (w.(x−x̃))², different-label pairs by −λ₃(w.(x−x̃))². λ₃ is accepted
  // only if Σ_M uuᵀ − λ₃ Σ_C uuᵀ is PSD on the probe data (pair sets built
  // from labels, up to cap_per_sample partners per sample).
  static PairwiseLoss link_constraint(double lambda3, const Dataset& probe,
                                      int cap_per_sample = 4) {
    if (!(lambda3 >= 0.0) || !std::isfinite(lambda3))
      throw invalid_config_error("link_constraint: lambda3 must be finite and >= 0");
    if (probe.size() < 2)
      throw invalid_config_error("link_constraint: probe data needs n >= 2");
    const Eigen::Index d = probe.dim();
    Mat q = Mat::Zero(d, d);
    const std::size_t n = probe.size();
    for (std::size_t i = 0; i < n; ++i) {
      int must = 0, cannot = 0;
      for (std::size_t j = i + 1; j < n && (must < cap_per_sample || cannot < cap_per_sample); ++j) {
        bool same = probe[i].y == probe[j].y;
        if (same && must >= cap_per_sample) continue;
        if (!same && cannot >= cap_per_sample) continue;
        Vec u = probe[i].x - probe[j].x;
        q += (same ? 1.0 : -lambda3) * (u * u.transpose());
        (same ? must : cannot)++;
      }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(q);
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < -1e-10)
      throw invalid_config_error(
          "link_constraint: lambda3 too large, must/cannot-link form not PSD "
          "(min eigenvalue " + format_double(min_eig) + ")");
    return PairwiseLoss(PairwiseKind::link_constraint, lambda3);
  }

  static PairwiseLoss from_id(const std::string& id, double lambda3 = 0.0,
                              const Dataset* probe = nullptr, int cap = 4) {
    if (id == "squared-ranking") return squared_ranking();
    if (id == "hinge-ranking") return hinge_ranking();
    if (id == "link-constraint") {
      if (probe == nullptr)
        throw invalid_config_error("link-constraint requires probe data");
      return link_constraint(lambda3, *probe, cap);
    }
    throw invalid_config_error("unknown pairwise loss: " + id);
  }

  PairwiseKind kind() const { return kind_; }
  double lambda3() const { return lambda3_; }

  std::string id() const {
    switch (kind_) {
      case PairwiseKind::squared_ranking: return "squared-ranking";
      case PairwiseKind::hinge_ranking: return "hinge-ranking";
      case PairwiseKind::link_constraint: return "link-constraint";
    }
    return "?";
  }

  double value(const Vec& w, const Sample& z, const Sample& zt) const {
    detail::check_eval_inputs(w, z);
    detail::check_eval_inputs(w, zt);
    return value_unchecked(w, z, zt);
  }

  double value_grad(const Vec& w, const Sample& z, const Sample& zt, Vec& grad) const {
    detail::check_eval_inputs(w, z);
    detail::check_eval_inputs(w, zt);
    return value_grad_unchecked(w, z, zt, grad);
  }

  Vec grad(const Vec& w, const Sample& z, const Sample& zt) const {
    Vec g;
    value_grad(w, z, zt, g);
    return g;
  }

  double value_unchecked(const Vec& w, const Sample& z, const Sample& zt) const {
    switch (kind_) {
      case PairwiseKind::squared_ranking: {
        double r = (z.y - zt.y) - w.dot(z.x - zt.x);
        return r * r;
      }
      case PairwiseKind::hinge_ranking: {
        double s = sign_of(z.y - zt.y);
        double v = 1.0 - s * w.dot(z.x - zt.x);
        return v > 0.0 ? v : 0.0;
      }
      case PairwiseKind::link_constraint: {
        double s = w.dot(z.x - zt.x);
        return (z.y == zt.y ? 1.0 : -lambda3_) * s * s;
      }
    }
    throw unsupported_error("pairwise loss kind");
  }

  double value_grad_unchecked(const Vec& w, const Sample& z, const Sample& zt,
                              Vec& grad) const {
    switch (kind_) {
      case PairwiseKind::squared_ranking: {
        double r = (z.y - zt.y) - w.dot(z.x - zt.x);
        grad = (-2.0 * r) * (z.x - zt.x);
        return r * r;
      }
      case PairwiseKind::hinge_ranking: {
        double s = sign_of(z.y - zt.y);
        double v = 1.0 - s * w.dot(z.x - zt.x);
        if (v > 0.0) {
          grad = (-s) * (z.x - zt.x);
          return v;
        }
        // subgradient 0 at and past the kink
        grad = Vec::Zero(w.size());
        return 0.0;
      }
      case PairwiseKind::link_constraint: {
        double c = z.y == zt.y ? 1.0 : -lambda3_;
        double s = w.dot(z.x - zt.x);
        grad = (2.0 * c * s) * (z.x - zt.x);
        return c * s * s;
      }
    }
    throw unsupported_error("pairwise loss kind");
  }

  LossConstants constants_on_ball(double B, double X, double Y) const {
    detail::check_ball_args(B, X);
    LossConstants c;
    c.ball_radius = B;
    c.x_bound = X;
    c.y_bound = Y;
    switch (kind_) {
      case PairwiseKind::squared_ranking:
        // residual ≤ 2Y + 2BX, ‖x−x̃‖ ≤ 2X ⇒ L = 8X(Y+BX), β = 8X².
        c.L = 8.0 * X * (Y + B * X);
        c.beta = 8.0 * X * X;
        break;
      case PairwiseKind::hinge_ranking:
        c.L = 2.0 * X;
        c.beta = std::nullopt;
        break;
      case PairwiseKind::link_constraint: {
        double a = std::max(1.0, lambda3_);
        c.L = 8.0 * a * B * X * X;
        c.beta = 8.0 * a * X * X;
        c.convex = false;  // cannot-link pairs carry negative curvature
        break;
      }
    }
    return c;
  }

 private:
  PairwiseLoss(PairwiseKind k, double lambda3) : kind_(k), lambda3_(lambda3) {}

  static double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

  PairwiseKind kind_;
  double lambda3_;
};

// ℓ(w; z, z̃) = τ f(w; z) + (1−τ) g(w; z, z̃)
class MixedLoss {
 public:
  MixedLoss(PointwiseLoss f, PairwiseLoss g, double tau)
      : f_(std::move(f)), g_(std::move(g)), tau_(tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw invalid_config_error("tau must be in [0,1]");
  }

  const PointwiseLoss& pointwise() const { return f_; }
  const PairwiseLoss& pairwise() const { return g_; }
  double tau() const { return tau_; }

  double value(const Vec& w, const Sample& z, const Sample& zt) const {
    if (tau_ == 1.0) return f_.value(w, z);
    if (tau_ == 0.0) return g_.value(w, z, zt);
    return tau_ * f_.value(w, z) + (1.0 - tau_) * g_.value(w, z, zt);
  }

  double value_grad(const Vec& w, const Sample& z, const Sample& zt, Vec& grad) const {
    if (tau_ == 1.0) return f_.value_grad(w, z, grad);
    if (tau_ == 0.0) return g_.value_grad(w, z, zt, grad);
    Vec gg;
    double vf = f_.value_grad(w, z, grad);
    double vg = g_.value_grad(w, z, zt, gg);
    grad = tau_ * grad + (1.0 - tau_) * gg;
    return tau_ * vf + (1.0 - tau_) * vg;
  }

  Vec grad(const Vec& w, const Sample& z, const Sample& zt) const {
    Vec g;
    value_grad(w, z, zt, g);
    return g;
  }

  // Componentwise max of the certified constants (the mixture inherits them).
  LossConstants constants_on_ball(double B, double X, double Y) const {
    LossConstants cf = f_.constants_on_ball(B, X, Y);
    LossConstants cg = g_.constants_on_ball(B, X, Y);
    LossConstants c;
    c.ball_radius = B;
    c.x_bound = X;
    c.y_bound = Y;
    c.L = std::max(cf.L, cg.L);
    if (cf.beta && cg.beta)
      c.beta = std::max(*cf.beta, *cg.beta);
    else
      c.beta = std::nullopt;
    c.sigma_cvx = std::min(cf.sigma_cvx, cg.sigma_cvx);
    c.convex = cf.convex && cg.convex;
    return c;
  }

 private:
  PointwiseLoss f_;
  PairwiseLoss g_;
  double tau_;
};

// ---------------------------------------------------------------------------
// Randomized audit of declared constants: max gradient norm and max gradient
// difference ratio over seeded probes. Declared constants must dominate.

struct ProbeConstants {
  double L_hat = 0.0;
  double beta_hat = 0.0;
};

namespace detail {

inline Sample random_sample(std::mt19937_64& rng, Eigen::Index d, double X, double Y) {
  std::uniform_real_distribution<double> ydist(-Y, Y);
  Sample z;
  z.x = random_in_ball(rng, d, X);
  z.y = ydist(rng);
  return z;
}

// Grad is a callable (const Vec&, rng) -> Vec evaluating the gradient at a
// random data point drawn inside the probe region.
template <class GradAt>
ProbeConstants probe_constants_impl(GradAt&& grad_at, Eigen::Index d, double B,
                                    long trials, std::uint64_t seed) {
  if (trials < 1) throw invalid_input_error("probe_constants: trials must be >= 1");
  std::mt19937_64 rng(derive_seed(seed, 0x70726f62ULL /*"prob"*/));
  ProbeConstants out;
  for (long t = 0; t < trials; ++t) {
    Vec u = random_in_ball(rng, d, B);
    Vec v = random_in_ball(rng, d, B);
    auto [gu, gv] = grad_at(u, v, rng);
    out.L_hat = std::max(out.L_hat, gu.norm());
    double duv = (u - v).norm();
    if (duv > 1e-12)  // degenerate u==v pairs contribute no ratio
      out.beta_hat = std::max(out.beta_hat, (gu - gv).norm() / duv);
  }
  return out;
}

}  // namespace detail

inline ProbeConstants probe_constants(const PointwiseLoss& loss, Eigen::Index d,
                                      double B, double X, double Y, long trials,
                                      std::uint64_t seed) {
  return detail::probe_constants_impl(
      [&](const Vec& u, const Vec& v, std::mt19937_64& rng) {
        Sample z = detail::random_sample(rng, d, X, Y);
        return std::pair<Vec, Vec>(loss.grad(u, z), loss.grad(v, z));
      },
      d, B, trials, seed);
}

inline ProbeConstants probe_constants(const PairwiseLoss& loss, Eigen::Index d,
                                      double B, double X, double Y, long trials,
                                      std::uint64_t seed) {
  return detail::probe_constants_impl(
      [&](const Vec& u, const Vec& v, std::mt19937_64& rng) {
        Sample z = detail::random_sample(rng, d, X, Y);
        Sample zt = detail::random_sample(rng, d, X, Y);
        return std::pair<Vec, Vec>(loss.grad(u, z, zt), loss.grad(v, z, zt));
      },
      d, B, trials, seed);
}

inline ProbeConstants probe_constants(const MixedLoss& loss, Eigen::Index d,
                                      double B, double X, double Y, long trials,
                                      std::uint64_t seed) {
  return detail::probe_constants_impl(
      [&](const Vec& u, const Vec& v, std::mt19937_64& rng) {
        Sample z = detail::random_sample(rng, d, X, Y);
        Sample zt = detail::random_sample(rng, d, X, Y);
        return std::pair<Vec, Vec>(loss.grad(u, z, zt), loss.grad(v, z, zt));
      },
      d, B, trials, seed);
}

}  // namespace ppl
