#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ppl/bounds.hpp"
#include "ppl/common.hpp"
#include "ppl/dataset.hpp"
#include "ppl/errors.hpp"
#include "ppl/loss.hpp"
#include "ppl/optim.hpp"
#include "ppl/risk.hpp"
#include "ppl/stability.hpp"

namespace ppl {

using json = nlohmann::json;

struct ExperimentConfig {
  std::uint64_t master_seed = 1;

  std::vector<long> n_grid = {100};
  std::vector<double> tau_grid = {0.5};
  std::vector<double> sigma_grid = {1.0};
  std::vector<double> eta_grid = {0.01};
  std::vector<long> T_grid = {300};
  std::vector<int> d_grid = {5};
  std::vector<double> noise_grid = {0.1};
  int trials = 1;

  std::string loss_point = "squared";
  std::string loss_pair = "squared-ranking";
  double lambda3 = 0.5;
  double lambda2 = 0.0;
  double ball_radius = 1.0;
  double feature_bound = 1.0;
  double true_w_scale = 0.5;
  std::string label_rule = "linear-regression";

  StabilityOptions stability{6, 2, 40, 10, 32, 0};
  long n_pop = 4000;
  int gap_resamples = 30;
  int m_resamples = 10;
  long n_ref = 20000;
  double delta = 0.05;
  double rrm_tol = 1e-9;
  long rrm_max_iters = 500000;
  int threads = 0;  // 0 = hardware concurrency

  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("master_seed", c.master_seed);
    get("n_grid", c.n_grid);
    get("tau_grid", c.tau_grid);
    get("sigma_grid", c.sigma_grid);
    get("eta_grid", c.eta_grid);
    get("T_grid", c.T_grid);
    get("d_grid", c.d_grid);
    get("noise_grid", c.noise_grid);
    get("trials", c.trials);
    get("loss_point", c.loss_point);
    get("loss_pair", c.loss_pair);
    get("lambda3", c.lambda3);
    get("lambda2", c.lambda2);
    get("ball_radius", c.ball_radius);
    get("feature_bound", c.feature_bound);
    get("true_w_scale", c.true_w_scale);
    get("label_rule", c.label_rule);
    get("n_pop", c.n_pop);
    get("gap_resamples", c.gap_resamples);
    get("m_resamples", c.m_resamples);
    get("n_ref", c.n_ref);
    get("delta", c.delta);
    get("rrm_tol", c.rrm_tol);
    get("rrm_max_iters", c.rrm_max_iters);
    get("threads", c.threads);
    if (j.contains("stability")) {
      const json& s = j.at("stability");
      auto gs = [&](const char* key, int& field) {
        if (s.contains(key)) field = s.at(key).get<int>();
      };
      gs("n_replacements", c.stability.n_replacements);
      gs("draws_per_index", c.stability.draws_per_index);
      gs("probe_size", c.stability.probe_size);
      gs("outer_resamples", c.stability.outer_resamples);
      gs("pair_cap", c.stability.pair_cap);
      gs("point_cap", c.stability.point_cap);
    }
    c.validate();
    return c;
  }

  json to_json() const {
    json j;
    j["master_seed"] = master_seed;
    j["n_grid"] = n_grid;
    j["tau_grid"] = tau_grid;
    j["sigma_grid"] = sigma_grid;
    j["eta_grid"] = eta_grid;
    j["T_grid"] = T_grid;
    j["d_grid"] = d_grid;
    j["noise_grid"] = noise_grid;
    j["trials"] = trials;
    j["loss_point"] = loss_point;
    j["loss_pair"] = loss_pair;
    j["lambda3"] = lambda3;
    j["lambda2"] = lambda2;
    j["ball_radius"] = ball_radius;
    j["feature_bound"] = feature_bound;
    j["true_w_scale"] = true_w_scale;
    j["label_rule"] = label_rule;
    j["stability"] = {{"n_replacements", stability.n_replacements},
                      {"draws_per_index", stability.draws_per_index},
                      {"probe_size", stability.probe_size},
                      {"outer_resamples", stability.outer_resamples},
                      {"pair_cap", stability.pair_cap},
                      {"point_cap", stability.point_cap}};
    j["n_pop"] = n_pop;
    j["gap_resamples"] = gap_resamples;
    j["m_resamples"] = m_resamples;
    j["n_ref"] = n_ref;
    j["delta"] = delta;
    j["rrm_tol"] = rrm_tol;
    j["rrm_max_iters"] = rrm_max_iters;
    j["threads"] = threads;
    return j;
  }

  void validate() const {
    auto nonempty = [](auto& v, const char* name) {
      if (v.empty()) throw invalid_config_error(std::string("sweep config: empty grid ") + name);
    };
    nonempty(n_grid, "n_grid");
    nonempty(tau_grid, "tau_grid");
    nonempty(sigma_grid, "sigma_grid");
    nonempty(eta_grid, "eta_grid");
    nonempty(T_grid, "T_grid");
    nonempty(d_grid, "d_grid");
    nonempty(noise_grid, "noise_grid");
    for (long n : n_grid)
      if (n < 2) throw invalid_config_error("sweep config: n must be >= 2");
    for (double t : tau_grid)
      if (!(t >= 0.0 && t <= 1.0)) throw invalid_config_error("sweep config: tau in [0,1]");
    for (double s : sigma_grid)
      if (!(s > 0.0)) throw invalid_config_error("sweep config: sigma_r must be > 0");
    if (trials < 1) throw invalid_config_error("sweep config: trials must be >= 1");
    if (!(delta > 0.0 && delta < 1.0 / std::numbers::e))
      throw invalid_config_error("sweep config: delta must be in (0, 1/e)");
  }

  long cell_count() const {
    return static_cast<long>(n_grid.size() * tau_grid.size() * sigma_grid.size() *
                             eta_grid.size() * T_grid.size() * d_grid.size() *
                             noise_grid.size());
  }
};

struct CellParams {
  long n = 0;
  double tau = 0.0;
  double sigma_r = 0.0;
  double eta = 0.0;
  long T = 0;
  int d = 0;
  double noise_std = 0.0;
};

inline CellParams cell_params(const ExperimentConfig& cfg, long cell) {
  CellParams p;
  long idx = cell;
  auto take = [&](auto& grid) {
    auto v = grid[static_cast<std::size_t>(idx % static_cast<long>(grid.size()))];
    idx /= static_cast<long>(grid.size());
    return v;
  };
  // row-major over (n, tau, sigma, eta, T, d, noise) with n fastest
  p.n = take(cfg.n_grid);
  p.tau = take(cfg.tau_grid);
  p.sigma_r = take(cfg.sigma_grid);
  p.eta = take(cfg.eta_grid);
  p.T = take(cfg.T_grid);
  p.d = take(cfg.d_grid);
  p.noise_std = take(cfg.noise_grid);
  return p;
}

struct SweepRow {
  long cell = 0;
  long trial = 0;
  long n = 0;
  long d = 0;
  double tau = 0.0;
  double sigma_r = 0.0;
  double eta = 0.0;
  long T = 0;
  double noise_std = 0.0;
  std::string loss_point;
  std::string loss_pair;
  double delta = 0.0;
  double rrm_tol = 0.0;

  double gap = 0.0, gap_se = 0.0;
  double mean_gap = 0.0, mean_gap_se = 0.0;
  double emp_point = 0.0, emp_pair = 0.0;
  double mean_emp_point = 0.0, mean_emp_pair = 0.0;
  double u_point = 0.0, u_pair = 0.0;
  double v_point = 0.0, v_pair = 0.0, v_se = 0.0;
  double h1_point = 0.0, h1_pair = 0.0, h_se = 0.0, h2 = 0.0;
  double drift = 0.0, ind_i = 0.0, ind_j = 0.0;
  double M_hat = 0.0, b_hat = 0.0, theta_hat = 0.0;
  double L_cert = 0.0, beta_cert = 0.0, L_run = 0.0;
  double ref_emp = 0.0, ref_pop = 0.0, ref_pop_se = 0.0;

  double thm1 = 0.0, eqstab = 0.0, lemma1 = 0.0, lemma3 = 0.0, thm4 = 0.0;
  double thm5 = 0.0, cor2 = 0.0, thm6 = 0.0, thm7 = 0.0;
  bool thm7_precond_ok = true;

  bool holds_eqstab = false, holds_lemma1 = false, holds_thm1 = false;
  bool holds_lemma3 = false, holds_thm4 = false, holds_thm5 = false;
  bool holds_cor2 = false, holds_thm6 = false, holds_thm7 = false;

  std::string error;
  double runtime_sec = 0.0;  // sidecar timings.csv only, excluded from determinism

  bool all_holds() const {
    return error.empty() && holds_eqstab && holds_lemma1 && holds_thm1 && holds_lemma3 &&
           holds_thm4 && holds_thm5 && holds_cor2 && holds_thm6 && holds_thm7;
  }
};

namespace detail {

struct SweepColumn {
  const char* name;
  std::variant<double SweepRow::*, long SweepRow::*, bool SweepRow::*,
               std::string SweepRow::*>
      member;
};

inline const std::vector<SweepColumn>& sweep_columns() {
  static const std::vector<SweepColumn> cols = {
      {"cell", &SweepRow::cell},
      {"trial", &SweepRow::trial},
      {"n", &SweepRow::n},
      {"d", &SweepRow::d},
      {"tau", &SweepRow::tau},
      {"sigma_r", &SweepRow::sigma_r},
      {"eta", &SweepRow::eta},
      {"T", &SweepRow::T},
      {"noise_std", &SweepRow::noise_std},
      {"loss_point", &SweepRow::loss_point},
      {"loss_pair", &SweepRow::loss_pair},
      {"delta", &SweepRow::delta},
      {"rrm_tol", &SweepRow::rrm_tol},
      {"gap", &SweepRow::gap},
      {"gap_se", &SweepRow::gap_se},
      {"mean_gap", &SweepRow::mean_gap},
      {"mean_gap_se", &SweepRow::mean_gap_se},
      {"emp_point", &SweepRow::emp_point},
      {"emp_pair", &SweepRow::emp_pair},
      {"mean_emp_point", &SweepRow::mean_emp_point},
      {"mean_emp_pair", &SweepRow::mean_emp_pair},
      {"u_point", &SweepRow::u_point},
      {"u_pair", &SweepRow::u_pair},
      {"v_point", &SweepRow::v_point},
      {"v_pair", &SweepRow::v_pair},
      {"v_se", &SweepRow::v_se},
      {"h1_point", &SweepRow::h1_point},
      {"h1_pair", &SweepRow::h1_pair},
      {"h_se", &SweepRow::h_se},
      {"h2", &SweepRow::h2},
      {"drift", &SweepRow::drift},
      {"ind_i", &SweepRow::ind_i},
      {"ind_j", &SweepRow::ind_j},
      {"M_hat", &SweepRow::M_hat},
      {"b_hat", &SweepRow::b_hat},
      {"theta_hat", &SweepRow::theta_hat},
      {"L_cert", &SweepRow::L_cert},
      {"beta_cert", &SweepRow::beta_cert},
      {"L_run", &SweepRow::L_run},
      {"ref_emp", &SweepRow::ref_emp},
      {"ref_pop", &SweepRow::ref_pop},
      {"ref_pop_se", &SweepRow::ref_pop_se},
      {"thm1", &SweepRow::thm1},
      {"eqstab", &SweepRow::eqstab},
      {"lemma1", &SweepRow::lemma1},
      {"lemma3", &SweepRow::lemma3},
      {"thm4", &SweepRow::thm4},
      {"thm5", &SweepRow::thm5},
      {"cor2", &SweepRow::cor2},
      {"thm6", &SweepRow::thm6},
      {"thm7", &SweepRow::thm7},
      {"thm7_precond_ok", &SweepRow::thm7_precond_ok},
      {"holds_eqstab", &SweepRow::holds_eqstab},
      {"holds_lemma1", &SweepRow::holds_lemma1},
      {"holds_thm1", &SweepRow::holds_thm1},
      {"holds_lemma3", &SweepRow::holds_lemma3},
      {"holds_thm4", &SweepRow::holds_thm4},
      {"holds_thm5", &SweepRow::holds_thm5},
      {"holds_cor2", &SweepRow::holds_cor2},
      {"holds_thm6", &SweepRow::holds_thm6},
      {"holds_thm7", &SweepRow::holds_thm7},
      {"error", &SweepRow::error},
  };
  return cols;
}

inline std::string sanitize_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace detail

inline std::string sweep_csv_header() {
  std::string h;
  for (const auto& col : detail::sweep_columns()) {
    if (!h.empty()) h += ',';
    h += col.name;
  }
  return h;
}

inline std::string sweep_csv_line(const SweepRow& row) {
  std::string line;
  for (const auto& col : detail::sweep_columns()) {
    if (!line.empty()) line += ',';
    std::visit(
        [&](auto member) {
          using M = std::decay_t<decltype(row.*member)>;
          if constexpr (std::is_same_v<M, double>)
            line += format_double(row.*member);
          else if constexpr (std::is_same_v<M, long>)
            line += std::to_string(row.*member);
          else if constexpr (std::is_same_v<M, bool>)
            line += (row.*member) ? '1' : '0';
          else
            line += detail::sanitize_field(row.*member);
        },
        col.member);
  }
  return line;
}

inline SweepRow sweep_row_from_csv(const std::string& line) {
  auto fields = split_csv_line(line);
  const auto& cols = detail::sweep_columns();
  if (fields.size() != cols.size())
    throw io_error("sweep csv: column count mismatch");
  SweepRow row;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    std::visit(
        [&](auto member) {
          using M = std::decay_t<decltype(row.*member)>;
          if constexpr (std::is_same_v<M, double>)
            row.*member = parse_double(fields[k]);
          else if constexpr (std::is_same_v<M, long>)
            row.*member = parse_long(fields[k]);
          else if constexpr (std::is_same_v<M, bool>)
            row.*member = fields[k] == "1";
          else
            row.*member = fields[k];
        },
        cols[k].member);
  }
  return row;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for writing: " + path);
  os << sweep_csv_header() << '\n';
  for (const SweepRow& row : rows) os << sweep_csv_line(row) << '\n';
}

inline std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw io_error("empty sweep csv: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != sweep_csv_header()) throw io_error("sweep csv: unexpected header");
  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(sweep_row_from_csv(line));
  }
  return rows;
}

// Recompute every holds flag from the row's stored raw values. Used by the
// report and by the round-trip invariants; must match what run_cell stored.
inline void recompute_holds(SweepRow& row) {
  row.holds_eqstab = row.drift <= row.eqstab + 1e-12 * (1.0 + row.eqstab);
  row.holds_lemma1 = std::max(row.u_point, row.u_pair) <=
                     row.lemma1 + 2.0 * row.L_cert * row.rrm_tol / row.sigma_r;
  row.holds_thm1 = std::abs(row.gap) <= row.thm1 + 3.0 * row.gap_se;
  row.holds_lemma3 =
      std::abs(row.ref_emp - row.ref_pop) <= row.lemma3 + 3.0 * row.ref_pop_se;
  row.holds_thm4 = std::abs(row.gap) <= row.thm4 + 3.0 * row.gap_se;
  row.holds_thm5 = row.mean_gap <= row.thm5 + 3.0 * std::sqrt(sqr(row.mean_gap_se) +
                                                              sqr(row.v_se));
  row.holds_cor2 =
      row.mean_gap <= row.cor2 + 3.0 * std::sqrt(sqr(row.mean_gap_se) +
                                                 sqr(row.L_cert * row.h_se));
  row.holds_thm6 = row.mean_gap <= row.thm6 + 3.0 * row.mean_gap_se;
  row.holds_thm7 =
      !row.thm7_precond_ok || row.mean_gap <= row.thm7 + 3.0 * row.mean_gap_se;
}

// ---------------------------------------------------------------------------

namespace detail {

inline double loss_value_at_zero_bound(const PointwiseLoss& f, double Y) {
  switch (f.kind()) {
    case PointwiseKind::squared: return Y * Y;
    case PointwiseKind::logistic: return std::log(2.0);
  }
  return 0.0;
}

inline double loss_value_at_zero_bound(const PairwiseLoss& g, double Y) {
  switch (g.kind()) {
    case PairwiseKind::squared_ranking: return 4.0 * Y * Y;
    case PairwiseKind::hinge_ranking: return 1.0;
    case PairwiseKind::link_constraint: return 0.0;
  }
  return 0.0;
}

// Every RRM output on data with |y| <= Y starts its descent at F(0) <= F0,
// so strong convexity keeps it inside the ball of radius sqrt(2 F0 / sigma).
inline double rrm_output_ball(const MixedLoss& m, double Y, double sigma_r) {
  double f0 = m.tau() * loss_value_at_zero_bound(m.pointwise(), Y) +
              (1.0 - m.tau()) * loss_value_at_zero_bound(m.pairwise(), Y);
  return std::sqrt(2.0 * f0 / sigma_r);
}

inline double certified_y_bound(const SyntheticGenerator& gen) {
  if (gen.label_rule == LabelRule::sign) return 1.0;
  return gen.true_w.norm() * gen.feature_bound + 6.0 * gen.noise_std;
}

struct MixedProbeStats {
  double max_abs_mean_point = 0.0;  // for M: probe max of |mean_r f|
  double max_abs_mean_pair = 0.0;
};

}  // namespace detail

inline SweepRow run_cell(const ExperimentConfig& cfg, long cell, long trial) {
  const CellParams p = cell_params(cfg, cell);
  SweepRow row;
  row.cell = cell;
  row.trial = trial;
  row.n = p.n;
  row.d = p.d;
  row.tau = p.tau;
  row.sigma_r = p.sigma_r;
  row.eta = p.eta;
  row.T = p.T;
  row.noise_std = p.noise_std;
  row.loss_point = cfg.loss_point;
  row.loss_pair = cfg.loss_pair;
  row.delta = cfg.delta;
  row.rrm_tol = cfg.rrm_tol;

  const std::uint64_t seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(cell),
                                         static_cast<std::uint64_t>(trial));
  SyntheticGenerator gen =
      make_generator(p.d, cfg.true_w_scale, cfg.feature_bound, p.noise_std,
                     label_rule_from_id(cfg.label_rule), derive_seed(seed, 1));

  Dataset S = sample_synthetic(gen, p.n);
  PointwiseLoss f = PointwiseLoss::from_id(cfg.loss_point);
  PairwiseLoss g = PairwiseLoss::from_id(cfg.loss_pair, cfg.lambda3, &S);
  MixedLoss m(f, g, p.tau);
  Regularizer reg = Regularizer::l2(p.sigma_r);
  if (cfg.lambda2 > 0.0) reg = Regularizer::elastic(p.sigma_r, cfg.lambda2);
  RrmTrainer trainer{m, reg, cfg.rrm_tol, cfg.rrm_max_iters};

  // Constants certified over the RRM output ball and the (very likely) label range.
  const double X = gen.feature_bound;
  const double Y_cert = detail::certified_y_bound(gen);
  const double B_rrm = detail::rrm_output_ball(m, Y_cert, p.sigma_r);
  LossConstants consts = m.constants_on_ball(std::max(B_rrm, cfg.ball_radius), X, Y_cert);
  row.L_cert = consts.L;
  row.beta_cert = consts.beta ? *consts.beta : std::numeric_limits<double>::quiet_NaN();

  // Trained model on this trial's dataset, single-draw gap for the
  // high-probability bounds.
  Vec w = trainer(S);
  RiskReport emp = empirical_mixed_risk(S, m, w);
  row.emp_point = emp.r_point_emp;
  row.emp_pair = emp.r_pair_emp;
  PopEstimate pop = population_risk_mc(gen, m, w, cfg.n_pop, derive_seed(seed, 2));
  row.gap = pop.estimate - emp.r_mixed_emp;
  row.gap_se = pop.std_error;

  // Mean gap over fresh resamples for the expectation bounds.
  {
    std::vector<double> gaps, emps_point, emps_pair;
    for (int r = 0; r < cfg.gap_resamples; ++r) {
      SyntheticGenerator gr = gen;
      gr.seed = derive_seed(seed, 3, static_cast<std::uint64_t>(r));
      Dataset Sr = sample_synthetic(gr, p.n);
      Vec wr = trainer(Sr);
      RiskReport er = empirical_mixed_risk(Sr, m, wr);
      PopEstimate pr = population_risk_mc(gen, m, wr, cfg.n_pop,
                                          derive_seed(seed, 4, static_cast<std::uint64_t>(r)));
      gaps.push_back(pr.estimate - er.r_mixed_emp);
      emps_point.push_back(er.r_point_emp);
      emps_pair.push_back(er.r_pair_emp);
    }
    row.mean_gap = mean_of(gaps);
    row.mean_gap_se = sample_std(gaps) / std::sqrt(static_cast<double>(gaps.size()));
    row.mean_emp_point = mean_of(emps_point);
    row.mean_emp_pair = mean_of(emps_pair);
  }

  // Uniform stability probe and Lemma 1. The probe stream is derived from
  // the non-n cell parameters so an n-series is evaluated on one probe set,
  // which keeps the scaling fit free of probe-location noise.
  {
    SyntheticGenerator gp = gen;
    gp.seed = derive_seed(cfg.master_seed ^ 0x70726f6265ULL,
                          std::bit_cast<std::uint64_t>(p.tau),
                          std::bit_cast<std::uint64_t>(p.sigma_r),
                          std::bit_cast<std::uint64_t>(p.noise_std) ^
                              std::uint64_t(p.d) ^ (std::uint64_t(p.T) << 20) ^
                              std::bit_cast<std::uint64_t>(p.eta));
    Dataset probe = sample_synthetic(gp, cfg.stability.probe_size);
    UniformStabilityResult u = uniform_stability_estimate(
        trainer, S, gen, m, probe, cfg.stability.n_replacements,
        cfg.stability.draws_per_index, derive_seed(seed, 6));
    row.u_point = u.u_point;
    row.u_pair = u.u_pair;
  }
  row.lemma1 = bounds::rrm_stability_const(row.L_cert, p.sigma_r, p.tau, p.n).value;

  // On-average stabilities and the expectation bounds.
  {
    StabilityEstimate est = on_average_stability(trainer, gen, m, p.n, cfg.stability,
                                                 derive_seed(seed, 7));
    row.v_point = est.v_point;
    row.v_pair = est.v_pair;
    row.v_se = std::max(est.v_point_se, est.v_pair_se);
    row.h1_point = est.h1_point;
    row.h1_pair = est.h1_pair;
    row.h_se = std::max(est.h1_point_se, est.h1_pair_se);
    row.h2 = est.h2;
  }
  row.thm5 = bounds::thm5_relation(row.v_point, row.v_pair).value;
  row.cor2 = bounds::cor2_relation(row.L_cert, row.h1_point, row.h1_pair).value;
  if (row.h2 > 0.0 && row.beta_cert == row.beta_cert) {
    row.thm6 = bounds::thm6_bound(row.beta_cert, row.h2, 0.0, p.tau, row.mean_emp_point,
                                  row.mean_emp_pair, true)
                   .value;
  } else {
    row.thm6 = std::numeric_limits<double>::infinity();  // zero-drift algorithm
  }
  {
    bounds::Thm7Value t7 =
        bounds::thm7_bound(row.beta_cert, p.sigma_r, row.beta_cert, p.tau, p.n,
                           row.mean_emp_point, row.mean_emp_pair);
    row.thm7 = t7.bound.value;
    row.thm7_precond_ok = t7.precondition_ok;
  }

  // Coupled SGD drift with per-run certified constants.
  {
    SgdConfig scfg;
    scfg.T = p.T;
    scfg.eta = p.eta;
    scfg.projection_radius = cfg.ball_radius;
    scfg.seed = derive_seed(seed, 8);
    int k = static_cast<int>(p.n) - 1;
    Sample z_new = gen.draw_replacement(static_cast<std::uint64_t>(k), scfg.seed);
    double y_run = std::abs(z_new.y);
    for (const Sample& z : S) y_run = std::max(y_run, std::abs(z.y));
    LossConstants run_consts = m.constants_on_ball(cfg.ball_radius, X, y_run);
    row.L_run = run_consts.L;
    DriftCheck dc =
        coupled_drift_check(S, z_new, k, scfg, m, run_consts, cfg.delta);
    row.drift = dc.drift;
    row.ind_i = dc.ind_i;
    row.ind_j = dc.ind_j;
    row.eqstab = dc.rhs_stab;
  }

  // M estimate for Thm 1: probe max of |mean over resampled models|.
  {
    SyntheticGenerator gp = gen;
    gp.seed = derive_seed(seed, 9);
    Dataset probe = sample_synthetic(gp, cfg.stability.probe_size);
    std::vector<Vec> models;
    for (int r = 0; r < cfg.m_resamples; ++r) {
      SyntheticGenerator gr = gen;
      gr.seed = derive_seed(seed, 10, static_cast<std::uint64_t>(r));
      models.push_back(trainer(sample_synthetic(gr, p.n)));
    }
    double mp = 0.0, mq = 0.0;
    for (const Sample& z : probe) {
      double acc = 0.0;
      for (const Vec& wm : models) acc += f.value_unchecked(wm, z);
      mp = std::max(mp, std::abs(acc / static_cast<double>(models.size())));
    }
    for (const Sample& za : probe)
      for (const Sample& zb : probe) {
        double acc = 0.0;
        for (const Vec& wm : models) acc += g.value_unchecked(wm, za, zb);
        mq = std::max(mq, std::abs(acc / static_cast<double>(models.size())));
      }
    row.M_hat = std::max(mp, mq);
  }
  row.thm1 = bounds::thm1_bound(row.lemma1, row.M_hat, p.tau, p.n, cfg.delta).value;

  // Reference solution: b, theta estimates and the Lemma 3 deviation check.
  {
    ReferenceSolution ref = solve_reference(gen, m, reg, cfg.n_ref, derive_seed(seed, 11),
                                            cfg.rrm_tol, cfg.rrm_max_iters);
    SyntheticGenerator gp = gen;
    gp.seed = derive_seed(seed, 12);
    Dataset probe = sample_synthetic(gp, std::max(cfg.stability.probe_size, 16));
    double b_hat = 0.0;
    std::vector<double> fv, gv;
    for (const Sample& z : probe) fv.push_back(f.value_unchecked(ref.w_star, z));
    for (std::size_t k = 0; k + 1 < probe.size(); k += 2)
      gv.push_back(g.value_unchecked(ref.w_star, probe[k], probe[k + 1]));
    for (const Sample& za : probe)
      for (const Sample& zb : probe)
        b_hat = std::max(b_hat, g.value_unchecked(ref.w_star, za, zb));
    for (double v : fv) b_hat = std::max(b_hat, v);
    row.b_hat = b_hat;
    row.theta_hat = std::max(sqr(sample_std(fv)), sqr(sample_std(gv)));
    row.lemma3 =
        bounds::bernstein_mixed_bound(row.b_hat, row.theta_hat, p.tau, p.n, cfg.delta)
            .value;
    row.ref_emp = empirical_mixed_risk(S, m, ref.w_star).r_mixed_emp;
    PopEstimate rp =
        population_risk_mc(gen, m, ref.w_star, cfg.n_pop, derive_seed(seed, 13));
    row.ref_pop = rp.estimate;
    row.ref_pop_se = rp.std_error;
  }
  row.thm4 = bounds::thm4_bound(row.b_hat, row.theta_hat, row.L_cert, p.sigma_r, p.tau,
                                p.n, cfg.delta)
                 .value;

  recompute_holds(row);
  return row;
}

inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                       const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const long cells = cfg.cell_count();
  const long jobs = cells * cfg.trials;

  auto run_job = [&](long job) {
    const long cell = job / cfg.trials;
    const long trial = job % cfg.trials;
    auto t0 = std::chrono::steady_clock::now();
    SweepRow row;
    try {
      row = run_cell(cfg, cell, trial);
    } catch (const std::exception& ex) {
      CellParams p = cell_params(cfg, cell);
      row = SweepRow{};
      row.cell = cell;
      row.trial = trial;
      row.n = p.n;
      row.d = p.d;
      row.tau = p.tau;
      row.sigma_r = p.sigma_r;
      row.eta = p.eta;
      row.T = p.T;
      row.noise_std = p.noise_std;
      row.loss_point = cfg.loss_point;
      row.loss_pair = cfg.loss_pair;
      row.delta = cfg.delta;
      row.rrm_tol = cfg.rrm_tol;
      row.error = ex.what();
    }
    row.runtime_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
  };

  std::vector<SweepRow> rows(static_cast<std::size_t>(jobs));
  unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs));

  std::ofstream os(fs::path(out_dir) / "sweep.csv");
  if (!os) throw io_error("cannot open sweep.csv for writing in " + out_dir);
  os << sweep_csv_header() << '\n';

  if (threads <= 1) {
    for (long job = 0; job < jobs; ++job) {
      rows[static_cast<std::size_t>(job)] = run_job(job);
      os << sweep_csv_line(rows[static_cast<std::size_t>(job)]) << '\n';
      os.flush();
    }
  } else {
    // batches of independent jobs; rows land in job order regardless of timing
    for (long base = 0; base < jobs; base += threads) {
      long count = std::min<long>(threads, jobs - base);
      std::vector<std::future<SweepRow>> futs;
      futs.reserve(static_cast<std::size_t>(count));
      for (long k = 0; k < count; ++k)
        futs.push_back(std::async(std::launch::async, run_job, base + k));
      for (long k = 0; k < count; ++k) {
        rows[static_cast<std::size_t>(base + k)] = futs[static_cast<std::size_t>(k)].get();
        os << sweep_csv_line(rows[static_cast<std::size_t>(base + k)]) << '\n';
        os.flush();
      }
    }
  }
  os.close();

  std::ofstream ts(fs::path(out_dir) / "timings.csv");
  ts << "cell,trial,runtime_sec\n";
  for (const SweepRow& row : rows)
    ts << row.cell << ',' << row.trial << ',' << format_double(row.runtime_sec) << '\n';

  std::ofstream cs(fs::path(out_dir) / "config.json");
  cs << cfg.to_json().dump(2) << '\n';
  return rows;
}

// ---------------------------------------------------------------------------

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  long points = 0;
};

inline SlopeFit fit_loglog_slope(const std::vector<double>& xs,
                                 const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw invalid_input_error("slope fit: size mismatch");
  if (xs.size() < 3) throw domain_error("slope fit: needs at least 3 points");
  const long n = static_cast<long>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(xs.size()), ly(ys.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!(xs[k] > 0.0) || !(ys[k] > 0.0))
      throw domain_error("slope fit: inputs must be strictly positive");
    lx[k] = std::log(xs[k]);
    ly[k] = std::log(ys[k]);
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-14) throw domain_error("slope fit: xs must not be constant");
  SlopeFit fit;
  fit.points = n;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0, my = sy / n;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    ss_res += sqr(ly[k] - (fit.intercept + fit.slope * lx[k]));
    ss_tot += sqr(ly[k] - my);
  }
  fit.r2 = ss_tot > 1e-300 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

struct ReportResult {
  std::string text;
  bool all_holds = false;
  bool slopes_ok = false;
  bool ok() const { return all_holds && slopes_ok; }
};

inline ReportResult make_report(const std::vector<SweepRow>& rows,
                                const std::string& out_dir = "") {
  if (rows.empty()) throw empty_input_error("report: no rows");
  namespace fs = std::filesystem;

  std::ostringstream out;
  out << "ppl sweep report\n";
  out << "rows: " << rows.size();
  long failed = 0;
  for (const SweepRow& r : rows)
    if (!r.error.empty()) ++failed;
  out << " (errors: " << failed << ")\n\n";

  struct HoldStat {
    const char* name;
    bool SweepRow::*flag;
  };
  const std::vector<HoldStat> stats = {
      {"eqstab", &SweepRow::holds_eqstab}, {"lemma1", &SweepRow::holds_lemma1},
      {"thm1", &SweepRow::holds_thm1},     {"lemma3", &SweepRow::holds_lemma3},
      {"thm4", &SweepRow::holds_thm4},     {"thm5", &SweepRow::holds_thm5},
      {"cor2", &SweepRow::holds_cor2},     {"thm6", &SweepRow::holds_thm6},
      {"thm7", &SweepRow::holds_thm7},
  };
  bool all_holds = failed == 0;
  out << "hold rates\n";
  for (const HoldStat& s : stats) {
    long ok = 0, total = 0;
    for (const SweepRow& r : rows) {
      if (!r.error.empty()) continue;
      ++total;
      if (r.*(s.flag)) ++ok;
    }
    if (total > 0 && ok != total) all_holds = false;
    out << "  " << s.name << ": " << ok << "/" << total << "\n";
  }

  // slope series: group by everything but n, fit max(u_point,u_pair) against n
  out << "\nscaling (max uniform-stability estimate vs n, expect slope in [-1.25,-0.75])\n";
  std::map<std::string, std::map<long, std::vector<double>>> series;
  for (const SweepRow& r : rows) {
    if (!r.error.empty()) continue;
    std::ostringstream key;
    key << "tau=" << format_double(r.tau) << "|sigma=" << format_double(r.sigma_r)
        << "|eta=" << format_double(r.eta) << "|T=" << r.T << "|d=" << r.d
        << "|noise=" << format_double(r.noise_std);
    series[key.str()][r.n].push_back(std::max(r.u_point, r.u_pair));
  }
  bool slopes_ok = true;
  long fitted = 0;
  for (const auto& [key, by_n] : series) {
    if (by_n.size() < 3) {
      out << "  " << key << ": insufficient points (" << by_n.size() << " n values)\n";
      continue;
    }
    std::vector<double> xs, ys;
    bool positive = true;
    for (const auto& [n, vals] : by_n) {
      double y = mean_of(vals);
      if (!(y > 0.0)) positive = false;
      xs.push_back(static_cast<double>(n));
      ys.push_back(y);
    }
    if (!positive) {
      out << "  " << key << ": degenerate (zero estimates), skipped\n";
      continue;
    }
    SlopeFit fit = fit_loglog_slope(xs, ys);
    bool ok = fit.slope >= -1.25 && fit.slope <= -0.75;
    if (!ok) slopes_ok = false;
    ++fitted;
    out << "  " << key << ": slope=" << format_double(fit.slope)
        << " r2=" << format_double(fit.r2) << (ok ? " ok" : " OUT OF RANGE") << "\n";
  }
  if (fitted == 0) out << "  (no series with >= 3 n values; slope gate vacuous)\n";

  if (failed > 0) {
    out << "\nfailed cells\n";
    for (const SweepRow& r : rows)
      if (!r.error.empty())
        out << "  cell=" << r.cell << " trial=" << r.trial << ": " << r.error << "\n";
  }
  out << "\noverall: " << ((all_holds && slopes_ok) ? "PASS" : "FAIL") << "\n";

  ReportResult res;
  res.text = out.str();
  res.all_holds = all_holds;
  res.slopes_ok = slopes_ok;

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream rt(fs::path(out_dir) / "report.txt");
    rt << res.text;
    std::ofstream ps(fs::path(out_dir) / "plot_stability_vs_n.csv");
    ps << "x,y,series\n";
    for (const auto& [key, by_n] : series)
      for (const auto& [n, vals] : by_n)
        ps << n << ',' << format_double(mean_of(vals)) << ',' << key << '\n';
    std::ofstream pg(fs::path(out_dir) / "plot_gap_vs_bounds.csv");
    pg << "x,y,series\n";
    for (const SweepRow& r : rows) {
      if (!r.error.empty()) continue;
      pg << r.n << ',' << format_double(std::abs(r.gap)) << ",gap|tau=" << format_double(r.tau)
         << '\n';
      pg << r.n << ',' << format_double(r.thm1) << ",thm1|tau=" << format_double(r.tau) << '\n';
      pg << r.n << ',' << format_double(r.thm4) << ",thm4|tau=" << format_double(r.tau) << '\n';
    }
  }
  return res;
}

}  // namespace ppl
