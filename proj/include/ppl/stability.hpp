#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ppl/bounds.hpp"
#include "ppl/common.hpp"
#include "ppl/dataset.hpp"
#include "ppl/errors.hpp"
#include "ppl/loss.hpp"
#include "ppl/optim.hpp"
#include "ppl/risk.hpp"

namespace ppl {

struct StabilityOptions {
  int n_replacements = 8;   // replaced indices per uniform-stability estimate
  int draws_per_index = 3;  // fresh z' draws per replaced index
  int probe_size = 50;      // fresh probe samples (training samples are always added)
  int outer_resamples = 50; // (S, S') Monte Carlo repetitions for Defs. 2-3
  int pair_cap = 64;        // ordered (i,j) pairs subsampled per resample
  int point_cap = 0;        // 0 = all indices in the Def. 2/3 point sums
};

// Raw per-cell record emitted alongside estimates (CSV: def,kind,i,j,trial,value,seed).
struct StabilityCell {
  std::string def;
  std::string kind;
  long i = -1;
  long j = -1;
  long trial = 0;
  double value = 0.0;
  std::uint64_t seed = 0;
};

struct StabilityEstimate {
  double u_point = 0.0, u_pair = 0.0;
  double v_point = 0.0, v_pair = 0.0;
  double h1_point = 0.0, h1_pair = 0.0, h2 = 0.0;
  double v_point_se = 0.0, v_pair_se = 0.0;
  double h1_point_se = 0.0, h1_pair_se = 0.0;
  long n = 0;
  int outer_resamples = 0;
  int probe_size = 0;
  int n_replacements = 0;
  int pair_cap = 0;
  int point_cap = 0;

  double gamma_uniform() const { return std::max(u_point, u_pair); }
  double gamma_loss() const { return std::max(v_point, v_pair); }
  double gamma_arg_l1() const { return std::max(h1_point, h1_pair); }
  double gamma_arg_l2() const { return h2; }
};

struct UniformStabilityResult {
  double u_point = 0.0;
  double u_pair = 0.0;
};

namespace detail {

inline std::vector<std::size_t> pick_indices(std::size_t n, int count,
                                             std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, 0x69647873ULL /*"idxs"*/));
  std::shuffle(idx.begin(), idx.end(), rng);
  if (count > 0 && static_cast<std::size_t>(count) < n)
    idx.resize(static_cast<std::size_t>(count));
  return idx;
}

}  // namespace detail

// Probe-maximized lower bound of the Def. 1 sups. The probe set is the given
// probe dataset plus all training samples; replacement draws come from the
// generator on sub-seeded streams; the trainer must be deterministic so the
// same algorithm randomness applies to S and every neighbor.
template <class Train>
UniformStabilityResult uniform_stability_estimate(
    Train&& train, const Dataset& S, const SyntheticGenerator& gen,
    const MixedLoss& losses, const Dataset& probe, int n_replacements,
    int draws_per_index, std::uint64_t seed,
    std::vector<StabilityCell>* cells = nullptr) {
  if (probe.empty()) throw invalid_input_error("uniform stability: probe must be nonempty");
  if (n_replacements < 1 || draws_per_index < 1)
    throw invalid_input_error("uniform stability: counts must be >= 1");

  std::vector<Sample> pts(probe.samples());
  pts.insert(pts.end(), S.begin(), S.end());

  const Vec w_base = train(S);
  const PointwiseLoss& f = losses.pointwise();
  const PairwiseLoss& g = losses.pairwise();

  UniformStabilityResult out;
  auto indices = detail::pick_indices(S.size(), n_replacements, seed);
  for (std::size_t pos = 0; pos < indices.size(); ++pos) {
    const std::size_t i = indices[pos];
    for (int r = 0; r < draws_per_index; ++r) {
      const std::uint64_t cell_seed =
          derive_seed(seed, 0x7a6e6577ULL /*"znew"*/, i, static_cast<std::uint64_t>(r));
      Sample z_new = gen.draw(cell_seed);
      Vec w_i = train(make_neighbor_i(S, i, z_new));

      double du_point = 0.0;
      for (const Sample& z : pts)
        du_point = std::max(du_point,
                            std::abs(f.value_unchecked(w_base, z) - f.value_unchecked(w_i, z)));
      double du_pair = 0.0;
      for (const Sample& za : pts)
        for (const Sample& zb : pts)
          du_pair = std::max(du_pair, std::abs(g.value_unchecked(w_base, za, zb) -
                                               g.value_unchecked(w_i, za, zb)));
      out.u_point = std::max(out.u_point, du_point);
      out.u_pair = std::max(out.u_pair, du_pair);
      if (cells) {
        cells->push_back({"uniform", "point", static_cast<long>(i), -1, r, du_point, cell_seed});
        cells->push_back({"uniform", "pair", static_cast<long>(i), -1, r, du_pair, cell_seed});
      }
    }
  }
  return out;
}

// Monte Carlo estimates of the Def. 2 (loss) and Def. 3 (argument) averages
// in one pass: each outer resample draws (S, S'), retrains on S, on each S_i
// for the point sums, and on subsampled S_{i,j} for the pair sums. The
// sampler is any callable (sub_seed) -> Dataset of size n drawing i.i.d.
// from the data distribution.
template <class Train, class Sampler>
StabilityEstimate on_average_stability_with(Train&& train, Sampler&& sampler,
                                            const MixedLoss& losses, long n,
                                            const StabilityOptions& opt,
                                            std::uint64_t seed,
                                            std::vector<StabilityCell>* cells = nullptr) {
  if (n < 2) throw insufficient_data_error("on-average stability: needs n >= 2");
  if (opt.outer_resamples < 1)
    throw invalid_input_error("on-average stability: outer_resamples must be >= 1");

  const PointwiseLoss& f = losses.pointwise();
  const PairwiseLoss& g = losses.pairwise();

  std::vector<double> vp_means, vq_means, h1p_means, h1q_means, h2sq_means;
  for (int outer = 0; outer < opt.outer_resamples; ++outer) {
    const std::uint64_t seed_s = derive_seed(seed, 0x5353ULL, static_cast<std::uint64_t>(outer), 1);
    const std::uint64_t seed_sp = derive_seed(seed, 0x5353ULL, static_cast<std::uint64_t>(outer), 2);
    Dataset S = sampler(seed_s);
    Dataset Sp = sampler(seed_sp);
    if (S.size() != static_cast<std::size_t>(n) || Sp.size() != static_cast<std::size_t>(n))
      throw invalid_input_error("on-average stability: sampler returned wrong size");
    Vec w = train(S);

    auto point_idx = detail::pick_indices(
        S.size(), opt.point_cap, derive_seed(seed, 0x7074ULL, static_cast<std::uint64_t>(outer)));
    double vp = 0.0, h1p = 0.0, h2sq = 0.0;
    for (std::size_t i : point_idx) {
      Vec w_i = train(make_neighbor_i(S, i, Sp[i]));
      double dloss = f.value_unchecked(w_i, S[i]) - f.value_unchecked(w, S[i]);
      double darg = (w - w_i).norm();
      vp += dloss;
      h1p += darg;
      h2sq += darg * darg;
      if (cells) {
        cells->push_back({"on-average", "point", static_cast<long>(i), -1, outer, dloss,
                          seed_sp});
        cells->push_back({"on-average-arg", "point", static_cast<long>(i), -1, outer,
                          darg, seed_sp});
      }
    }
    const double np = static_cast<double>(point_idx.size());
    vp_means.push_back(vp / np);
    h1p_means.push_back(h1p / np);
    h2sq_means.push_back(h2sq / np);

    // ordered pairs i != j, uniformly subsampled
    std::mt19937_64 prng(derive_seed(seed, 0x7072ULL, static_cast<std::uint64_t>(outer)));
    std::uniform_int_distribution<long> pick(0, n - 1);
    const long total_pairs = n * (n - 1);
    const long pair_count = std::min<long>(opt.pair_cap > 0 ? opt.pair_cap : total_pairs,
                                           total_pairs);
    double vq = 0.0, h1q = 0.0;
    for (long p = 0; p < pair_count; ++p) {
      long i = pick(prng), j = pick(prng);
      while (j == i) j = pick(prng);
      std::size_t lo = static_cast<std::size_t>(std::min(i, j));
      std::size_t hi = static_cast<std::size_t>(std::max(i, j));
      Vec w_ij = train(make_neighbor_ij(S, lo, hi, Sp[lo], Sp[hi]));
      double dloss = g.value_unchecked(w_ij, S[static_cast<std::size_t>(i)],
                                       S[static_cast<std::size_t>(j)]) -
                     g.value_unchecked(w, S[static_cast<std::size_t>(i)],
                                       S[static_cast<std::size_t>(j)]);
      double darg = (w - w_ij).norm();
      vq += dloss;
      h1q += darg;
      if (cells) {
        cells->push_back({"on-average", "pair", i, j, outer, dloss, seed_sp});
        cells->push_back({"on-average-arg", "pair", i, j, outer, darg, seed_sp});
      }
    }
    vq_means.push_back(vq / static_cast<double>(pair_count));
    h1q_means.push_back(h1q / static_cast<double>(pair_count));
  }

  StabilityEstimate est;
  est.n = n;
  est.outer_resamples = opt.outer_resamples;
  est.pair_cap = opt.pair_cap;
  est.point_cap = opt.point_cap;
  est.v_point = mean_of(vp_means);
  est.v_pair = mean_of(vq_means);
  est.h1_point = mean_of(h1p_means);
  est.h1_pair = mean_of(h1q_means);
  est.h2 = std::sqrt(std::max(0.0, mean_of(h2sq_means)));
  const double root_outer = std::sqrt(static_cast<double>(opt.outer_resamples));
  est.v_point_se = sample_std(vp_means) / root_outer;
  est.v_pair_se = sample_std(vq_means) / root_outer;
  est.h1_point_se = sample_std(h1p_means) / root_outer;
  est.h1_pair_se = sample_std(h1q_means) / root_outer;
  return est;
}

template <class Train>
StabilityEstimate on_average_stability(Train&& train, const SyntheticGenerator& gen,
                                       const MixedLoss& losses, long n,
                                       const StabilityOptions& opt, std::uint64_t seed,
                                       std::vector<StabilityCell>* cells = nullptr) {
  auto sampler = [&](std::uint64_t sub_seed) {
    SyntheticGenerator g = gen;
    g.seed = sub_seed;
    return sample_synthetic(g, n);
  };
  return on_average_stability_with(train, sampler, losses, n, opt, seed, cells);
}

template <class Train>
std::pair<double, double> on_average_loss_stability(Train&& train,
                                                    const SyntheticGenerator& gen,
                                                    const MixedLoss& losses, long n,
                                                    int outer_resamples,
                                                    std::uint64_t seed,
                                                    const StabilityOptions& base = {}) {
  StabilityOptions opt = base;
  opt.outer_resamples = outer_resamples;
  StabilityEstimate est = on_average_stability(train, gen, losses, n, opt, seed);
  return {est.v_point, est.v_pair};
}

struct ArgumentStabilityResult {
  double h1_point = 0.0;
  double h1_pair = 0.0;
  double h2 = 0.0;
};

template <class Train>
ArgumentStabilityResult on_average_argument_stability(Train&& train,
                                                      const SyntheticGenerator& gen,
                                                      const MixedLoss& losses, long n,
                                                      int outer_resamples,
                                                      std::uint64_t seed,
                                                      const StabilityOptions& base = {}) {
  StabilityOptions opt = base;
  opt.outer_resamples = outer_resamples;
  StabilityEstimate est = on_average_stability(train, gen, losses, n, opt, seed);
  return {est.h1_point, est.h1_pair, est.h2};
}

// ---------------------------------------------------------------------------
// Per-run drift check for coupled SGD on neighboring datasets.

struct DriftCheck {
  double drift = 0.0;          // ||w_T - w'_T||
  double rhs_stab = 0.0;       // parameter-scale per-run bound from indicators
  double rhs_stab_loss = 0.0;  // loss-scale value (one extra factor L)
  double rhs_highprob = 0.0;   // closed-form high-probability display
  double ind_i = 0.0;
  double ind_j = 0.0;
  int replaced_index = -1;
  bool holds = false;
};

inline DriftCheck coupled_drift_check(const Dataset& S, const Sample& z_new,
                                      int replaced_index, const SgdConfig& cfg,
                                      const MixedLoss& m, const LossConstants& consts,
                                      double delta = 0.05) {
  if (!consts.beta || !consts.convex)
    throw invalid_config_error("drift check: losses must be smooth and convex");
  for (long t = 0; t < cfg.T; ++t)
    if (cfg.step_size(t) > 2.0 / *consts.beta)
      throw invalid_config_error("drift check: step size must satisfy eta <= 2/beta");
  if (replaced_index < 0 || static_cast<std::size_t>(replaced_index) >= S.size())
    throw index_error("drift check: replaced index out of range");

  Dataset S_i = make_neighbor_i(S, static_cast<std::size_t>(replaced_index), z_new);
  auto [tr, tr_i] = sgd_coupled_pair(S, S_i, m, cfg, Vec::Zero(S.dim()));

  DriftCheck out;
  out.replaced_index = replaced_index;
  out.ind_i = tr.ind_i_eta_sum;
  out.ind_j = tr.ind_j_eta_sum;
  out.drift = (tr.w_final - tr_i.w_final).norm();
  out.rhs_stab =
      bounds::sgd_stability_rhs(out.ind_i, out.ind_j, consts.L, m.tau(), true).value;
  out.rhs_stab_loss =
      bounds::sgd_stability_rhs(out.ind_i, out.ind_j, consts.L, m.tau(), false).value;
  out.rhs_highprob =
      bounds::sgd_drift_highprob(consts.L, cfg.step_size(0), m.tau(), cfg.T,
                                 static_cast<long>(S.size()), delta)
          .value;
  out.holds = out.drift <= out.rhs_stab + 1e-12 * (1.0 + out.rhs_stab);
  return out;
}

// Convenience: draw the replacement sample from the generator on a stream
// derived from the SGD seed.
inline DriftCheck coupled_drift_check(const Dataset& S, const SyntheticGenerator& gen,
                                      int replaced_index, const SgdConfig& cfg,
                                      const MixedLoss& m, const LossConstants& consts,
                                      double delta = 0.05) {
  Sample z_new =
      gen.draw_replacement(static_cast<std::uint64_t>(replaced_index), cfg.seed);
  return coupled_drift_check(S, z_new, replaced_index, cfg, m, consts, delta);
}

}  // namespace ppl
