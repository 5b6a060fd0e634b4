#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "ppl/common.hpp"
#include "ppl/dataset.hpp"
#include "ppl/errors.hpp"
#include "ppl/loss.hpp"
#include "ppl/risk.hpp"

namespace ppl {

enum class StepSchedule { constant, inv_sqrt_T };

struct SgdConfig {
  long T = 0;
  StepSchedule schedule = StepSchedule::constant;
  double eta = 0.01;    // constant schedule
  double eta_c = 1.0;   // inv_sqrt_T schedule: eta_t = eta_c / sqrt(T)
  std::optional<double> projection_radius;
  std::uint64_t seed = 0;
  bool keep_history = false;

  double step_size(long /*t*/) const {
    if (schedule == StepSchedule::constant) return eta;
    return eta_c / std::sqrt(static_cast<double>(T));
  }

  void validate() const {
    if (T < 0) throw invalid_config_error("sgd: T must be >= 0");
    double s = schedule == StepSchedule::constant ? eta : eta_c;
    if (!(s > 0.0) || !std::isfinite(s))
      throw invalid_config_error("sgd: step size must be finite and > 0");
    if (projection_radius && !(*projection_radius > 0.0))
      throw invalid_config_error("sgd: projection radius must be > 0");
  }
};

// Ordered pairs (i_t, j_t), i_t != j_t, uniform over ordered pairs from [n].
// Rejection from the product distribution; deterministic in (seed, n, T) and
// independent of dataset contents.
struct IndexStream {
  std::vector<int> i;
  std::vector<int> j;

  static IndexStream make(std::uint64_t seed, int n, long T) {
    if (n < 2) throw insufficient_data_error("index stream: needs n >= 2");
    std::mt19937_64 rng(derive_seed(seed, 0x73747265ULL /*"stre"*/));
    std::uniform_int_distribution<int> pick(0, n - 1);
    IndexStream s;
    s.i.reserve(static_cast<std::size_t>(T));
    s.j.reserve(static_cast<std::size_t>(T));
    for (long t = 0; t < T; ++t) {
      int a = pick(rng);
      int b = pick(rng);
      while (b == a) b = pick(rng);
      s.i.push_back(a);
      s.j.push_back(b);
    }
    return s;
  }

  long length() const { return static_cast<long>(i.size()); }
};

struct SgdTrace {
  Vec w_final;
  IndexStream stream;
  std::vector<Vec> history;  // populated only when cfg.keep_history
  int tracked_index = -1;
  // Sum_t eta_t * I[i_t = k] and Sum_t eta_t * I[j_t = k] for the tracked k.
  double ind_i_eta_sum = 0.0;
  double ind_j_eta_sum = 0.0;
};

inline Vec project_ball(const Vec& w, double radius) {
  double nrm = w.norm();
  return nrm > radius ? Vec(w * (radius / nrm)) : w;
}

namespace detail {

inline SgdTrace sgd_run_with_stream(const Dataset& S, const MixedLoss& m,
                                    const SgdConfig& cfg, const Vec& w0,
                                    IndexStream stream, int tracked_index) {
  SgdTrace trace;
  trace.tracked_index = tracked_index;
  Vec w = w0;
  Vec grad;
  if (cfg.keep_history) trace.history.push_back(w);
  for (long t = 0; t < cfg.T; ++t) {
    const double eta = cfg.step_size(t);
    const Sample& zi = S[static_cast<std::size_t>(stream.i[t])];
    const Sample& zj = S[static_cast<std::size_t>(stream.j[t])];
    m.value_grad(w, zi, zj, grad);
    w -= eta * grad;
    if (cfg.projection_radius) w = project_ball(w, *cfg.projection_radius);
    if (!w.allFinite())
      throw divergence_error("sgd: non-finite iterate at step " + std::to_string(t), t);
    if (tracked_index >= 0) {
      if (stream.i[t] == tracked_index) trace.ind_i_eta_sum += eta;
      if (stream.j[t] == tracked_index) trace.ind_j_eta_sum += eta;
    }
    if (cfg.keep_history) trace.history.push_back(w);
  }
  trace.w_final = std::move(w);
  trace.stream = std::move(stream);
  return trace;
}

}  // namespace detail

inline SgdTrace sgd_run(const Dataset& S, const MixedLoss& m, const SgdConfig& cfg,
                        const Vec& w0, int tracked_index = -1) {
  cfg.validate();
  if (S.size() < 2) throw insufficient_data_error("sgd: needs n >= 2");
  if (w0.size() != S.dim()) throw invalid_input_error("sgd: w0 dimension mismatch");
  if (cfg.projection_radius && w0.norm() > *cfg.projection_radius * (1.0 + 1e-12))
    throw invalid_config_error("sgd: w0 outside projection ball");
  IndexStream stream = IndexStream::make(cfg.seed, static_cast<int>(S.size()), cfg.T);
  return detail::sgd_run_with_stream(S, m, cfg, w0, std::move(stream), tracked_index);
}

// Coupled runs on neighboring datasets sharing the identical index stream.
// The tracked index is the position where the two datasets differ.
inline std::pair<SgdTrace, SgdTrace> sgd_coupled_pair(const Dataset& S,
                                                      const Dataset& S_i,
                                                      const MixedLoss& m,
                                                      const SgdConfig& cfg,
                                                      const Vec& w0) {
  cfg.validate();
  if (S.size() != S_i.size() || S.dim() != S_i.dim())
    throw coupling_error("coupled pair: datasets must have equal shape");
  int diff_at = -1;
  for (std::size_t p = 0; p < S.size(); ++p) {
    if (!same_sample(S[p], S_i[p])) {
      if (diff_at >= 0)
        throw coupling_error("coupled pair: datasets differ in more than one position");
      diff_at = static_cast<int>(p);
    }
  }
  if (diff_at < 0)
    throw coupling_error("coupled pair: datasets are identical");
  IndexStream stream = IndexStream::make(cfg.seed, static_cast<int>(S.size()), cfg.T);
  SgdTrace a = detail::sgd_run_with_stream(S, m, cfg, w0, stream, diff_at);
  SgdTrace b = detail::sgd_run_with_stream(S_i, m, cfg, w0, std::move(stream), diff_at);
  return {std::move(a), std::move(b)};
}

// ---------------------------------------------------------------------------
// RRM: proximal gradient with backtracking on F_S = R_S + r. Plain gradient
// descent when lambda2 = 0. Stops when the gradient-map norm falls below tol.

struct RrmResult {
  Vec w;
  double residual = 0.0;
  long iterations = 0;
  double objective = 0.0;
};

namespace detail {

inline Vec soft_threshold(const Vec& v, double t) {
  Vec out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    double a = v[k];
    out[k] = a > t ? a - t : (a < -t ? a + t : 0.0);
  }
  return out;
}

}  // namespace detail

inline RrmResult rrm_solve_full(const Dataset& S, const MixedLoss& m,
                                const Regularizer& reg, double tol = 0.0,
                                long max_iters = 500000) {
  reg.validate();
  if (m.pairwise().kind() == PairwiseKind::hinge_ranking && m.tau() < 1.0)
    throw invalid_config_error("rrm: hinge-ranking is nonsmooth; solver requires smooth losses");
  if (tol < 0.0) throw invalid_config_error("rrm: tol must be >= 0");
  if (S.empty()) throw insufficient_data_error("rrm: empty dataset");

  const Eigen::Index d = S.dim();
  const double lambda1 = reg.kind == RegKind::elastic ? reg.lambda2 : 0.0;

  auto smooth_value_grad = [&](const Vec& wv, Vec& gv) {
    double v = mixed_risk_value_grad(S, m, wv, gv);
    gv += reg.grad_smooth(wv);
    return v + 0.5 * reg.sigma_r * wv.squaredNorm();
  };

  Vec w = Vec::Zero(d);
  Vec grad(d);
  double gval = smooth_value_grad(w, grad);
  if (tol == 0.0) tol = 1e-10 * (1.0 + grad.norm());
  double fval = gval + lambda1 * w.lpNorm<1>();

  // The step only ever shrinks: the quadratic-model test certifies it while
  // objective decreases are above float noise (the early phase), and the
  // noise guard stops spurious halving cascades near the optimum, where an
  // already-certified step keeps contracting. Stopping uses gradient
  // information directly, which stays accurate when value differences do not.
  double step = 1.0;
  double resid = std::numeric_limits<double>::infinity();
  Vec w_next(d), grad_next(d), diff(d);
  for (long it = 1; it <= max_iters; ++it) {
    if (lambda1 == 0.0) {
      resid = grad.norm();
    } else {
      Vec probe = detail::soft_threshold(w - step * grad, step * lambda1);
      resid = (w - probe).norm() / step;
    }
    if (resid <= tol) {
      RrmResult res;
      res.w = w;
      res.residual = resid;
      res.iterations = it - 1;
      res.objective = fval;
      return res;
    }

    double g_next = 0.0;
    bool accepted = false;
    const double noise_guard = 16.0 * std::numeric_limits<double>::epsilon() *
                               (1.0 + std::abs(gval));
    for (int bt = 0; bt < 200; ++bt) {
      w_next = w - step * grad;
      if (lambda1 > 0.0) w_next = detail::soft_threshold(w_next, step * lambda1);
      diff = w_next - w;
      g_next = smooth_value_grad(w_next, grad_next);
      if (g_next <=
          gval + grad.dot(diff) + diff.squaredNorm() / (2.0 * step) + noise_guard) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) throw numeric_error("rrm: backtracking failed to find a step");

    double f_next = g_next + lambda1 * w_next.lpNorm<1>();
    // the accepted step guarantees descent; a violation means a broken gradient
    if (f_next > fval + 1e-12 * (1.0 + std::abs(fval)))
      throw numeric_error("rrm: objective increased within an accepted step");
    w.swap(w_next);
    grad.swap(grad_next);
    gval = g_next;
    fval = f_next;
  }
  throw no_convergence_error(
      "rrm: no convergence in " + std::to_string(max_iters) +
          " iterations (residual " + format_double(resid) + ")",
      resid);
}

inline Vec rrm_solve(const Dataset& S, const MixedLoss& m, const Regularizer& reg,
                     double tol = 0.0, long max_iters = 500000) {
  return rrm_solve_full(S, m, reg, tol, max_iters).w;
}

// ---------------------------------------------------------------------------
// Reference minimizers on a large independent sample: w* minimizes R + r and
// w*_R minimizes R alone (tiny ridge added for conditioning).

struct ReferenceSolution {
  Vec w_star;
  Vec w_star_R;
  double residual_star = 0.0;
  double residual_star_R = 0.0;
  long n_ref = 0;
  std::uint64_t seed = 0;
};

inline ReferenceSolution solve_reference(const SyntheticGenerator& gen,
                                         const MixedLoss& m, const Regularizer& reg,
                                         long n_ref, std::uint64_t seed,
                                         double tol = 0.0, long max_iters = 500000) {
  if (n_ref < 2) throw invalid_config_error("reference: n_ref must be >= 2");
  SyntheticGenerator g = gen;
  g.seed = derive_seed(seed, 0x72656673ULL /*"refs"*/);
  Dataset ref = sample_synthetic(g, n_ref);
  ReferenceSolution out;
  out.n_ref = n_ref;
  out.seed = seed;
  RrmResult a = rrm_solve_full(ref, m, reg, tol, max_iters);
  out.w_star = std::move(a.w);
  out.residual_star = a.residual;
  RrmResult b = rrm_solve_full(ref, m, Regularizer::l2(1e-8), tol, max_iters);
  out.w_star_R = std::move(b.w);
  out.residual_star_R = b.residual;
  return out;
}

// Trainer functors: a fixed algorithm S -> w, reusable across neighbor sets.
// SgdTrainer keeps one seed so every dataset sees the identical index stream.

struct RrmTrainer {
  MixedLoss loss;
  Regularizer reg;
  double tol = 0.0;
  long max_iters = 500000;

  Vec operator()(const Dataset& S) const { return rrm_solve(S, loss, reg, tol, max_iters); }
};

struct SgdTrainer {
  MixedLoss loss;
  SgdConfig cfg;

  Vec operator()(const Dataset& S) const {
    return sgd_run(S, loss, cfg, Vec::Zero(S.dim())).w_final;
  }
};

struct ConstantTrainer {
  Vec w;
  const Vec& operator()(const Dataset&) const { return w; }
};

}  // namespace ppl
