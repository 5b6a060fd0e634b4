#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ppl/config.hpp"
#include "ppl/ppl.hpp"

namespace {

using ppl::Vec;
using json = nlohmann::json;

json vec_to_json(const Vec& w) {
  json arr = json::array();
  for (Eigen::Index k = 0; k < w.size(); ++k) arr.push_back(w[k]);
  return arr;
}

Vec vec_from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ppl::io_error("cannot open model file: " + path);
  json j;
  is >> j;
  if (!j.is_array()) throw ppl::io_error("model file must hold a JSON array");
  Vec w(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k)
    w[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  return w;
}

void emit(const json& j, const std::optional<std::string>& out) {
  if (out) {
    std::ofstream os(*out);
    if (!os) throw ppl::io_error("cannot open for writing: " + *out);
    os << j.dump(2) << '\n';
  } else {
    std::cout << j.dump(2) << std::endl;
  }
}

json bound_to_json(const ppl::bounds::BoundValue& b) {
  json j;
  j["theorem"] = ppl::bounds::theorem_id(b.id);
  j["inputs"] = b.inputs;
  j["value"] = b.value;
  return j;
}

int cmd_gen_data(int dim, long n, double noise, std::uint64_t seed, double feature_bound,
                 double true_w_scale, const std::string& label_rule,
                 const std::string& out) {
  ppl::SyntheticGenerator gen =
      ppl::make_generator(dim, true_w_scale, feature_bound, noise,
                          ppl::label_rule_from_id(label_rule), seed);
  ppl::Dataset S = ppl::sample_synthetic(gen, n);
  ppl::write_csv(S, out);
  std::cout << "wrote " << S.size() << " samples (d=" << S.dim() << ") to " << out
            << std::endl;
  return 0;
}

ppl::Dataset load_or_generate(const ppl::RunConfig& cfg,
                              const std::optional<std::string>& data_path) {
  if (data_path) return ppl::read_csv_file(*data_path);
  return ppl::sample_synthetic(cfg.generator(), cfg.n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pointwise+pairwise learning: training, stability estimation and "
               "bound verification"};
  app.require_subcommand(1);

  // gen-data
  auto* gen_cmd = app.add_subcommand("gen-data", "write a synthetic dataset as CSV");
  int gd_dim = 5;
  long gd_n = 100;
  double gd_noise = 0.1, gd_bound = 1.0, gd_scale = 0.5;
  std::uint64_t gd_seed = 42;
  std::string gd_rule = "linear-regression", gd_out;
  gen_cmd->add_option("--dim", gd_dim, "feature dimension");
  gen_cmd->add_option("--n", gd_n, "sample count");
  gen_cmd->add_option("--noise", gd_noise, "label noise std");
  gen_cmd->add_option("--seed", gd_seed, "generator seed");
  gen_cmd->add_option("--feature-bound", gd_bound, "feature norm bound");
  gen_cmd->add_option("--true-w-scale", gd_scale, "norm of the generating weights");
  gen_cmd->add_option("--label-rule", gd_rule, "linear-regression | sign");
  gen_cmd->add_option("--out", gd_out, "output csv path")->required();

  // risk
  auto* risk_cmd = app.add_subcommand("risk", "print a JSON risk report");
  std::string rk_config;
  std::optional<std::string> rk_data, rk_model, rk_out;
  bool rk_population = false;
  risk_cmd->add_option("--config", rk_config, "run config json")->required();
  risk_cmd->add_option("--data", rk_data, "dataset csv (default: generate)");
  risk_cmd->add_option("--model", rk_model, "model JSON array (default: zeros)");
  risk_cmd->add_flag("--population", rk_population, "add Monte Carlo population estimate");
  risk_cmd->add_option("--out", rk_out, "write report here instead of stdout");

  // train-sgd
  auto* sgd_cmd = app.add_subcommand("train-sgd", "run SGD and emit the model");
  std::string ts_config;
  std::optional<double> ts_tau, ts_eta;
  std::optional<long> ts_T;
  std::optional<std::uint64_t> ts_seed;
  std::optional<std::string> ts_data, ts_out;
  sgd_cmd->add_option("--config", ts_config, "run config json")->required();
  sgd_cmd->add_option("--tau", ts_tau, "override loss.tau");
  sgd_cmd->add_option("--eta", ts_eta, "override sgd.eta");
  sgd_cmd->add_option("--T", ts_T, "override sgd.T");
  sgd_cmd->add_option("--seed", ts_seed, "override sgd.seed");
  sgd_cmd->add_option("--data", ts_data, "dataset csv (default: generate)");
  sgd_cmd->add_option("--out", ts_out, "write model here instead of stdout");

  // train-rrm
  auto* rrm_cmd = app.add_subcommand("train-rrm", "solve the regularized objective");
  std::string tr_config;
  std::optional<double> tr_tau, tr_sigma, tr_tol;
  std::optional<std::string> tr_data, tr_out;
  rrm_cmd->add_option("--config", tr_config, "run config json")->required();
  rrm_cmd->add_option("--tau", tr_tau, "override loss.tau");
  rrm_cmd->add_option("--sigma", tr_sigma, "override regularizer.sigma_r");
  rrm_cmd->add_option("--tol", tr_tol, "override rrm.tol");
  rrm_cmd->add_option("--data", tr_data, "dataset csv (default: generate)");
  rrm_cmd->add_option("--out", tr_out, "write model here instead of stdout");

  // stability
  auto* st_cmd = app.add_subcommand("stability", "estimate the stability measures");
  std::string st_config;
  std::string st_algorithm = "rrm";
  std::optional<std::string> st_json, st_csv;
  st_cmd->add_option("--config", st_config, "run config json")->required();
  st_cmd->add_option("--algorithm", st_algorithm, "rrm | sgd");
  st_cmd->add_option("--out-json", st_json, "estimate JSON path (default stdout)");
  st_cmd->add_option("--out-csv", st_csv, "per-cell raw values csv path");

  // bounds
  auto* bd_cmd = app.add_subcommand("bounds", "evaluate one closed-form bound");
  std::string bd_theorem;
  std::map<std::string, double> bd;
  bd_cmd->add_option("--theorem", bd_theorem,
                     "thm1|eqstab|thm2hp|lemma1|lemma2|lemma3|thm4|chernoff|thm5|cor2|"
                     "thm6|thm7|lemma4")
      ->required();
  for (const char* key :
       {"gamma", "M", "tau", "n", "delta", "ind-i", "ind-j", "L", "eta", "t", "sigma",
        "b", "theta", "mu", "v-point", "v-pair", "h1-point", "h1-pair", "beta",
        "epsilon", "emp-point", "emp-pair", "mean-sq-drift", "parameter-scale"})
    bd_cmd->add_option("--" + std::string(key), bd[key]);
  std::optional<std::string> bd_out;
  bd_cmd->add_option("--out", bd_out, "write JSON here instead of stdout");

  // sweep / report
  auto* sw_cmd = app.add_subcommand("sweep", "run the experiment grid");
  std::string sw_config, sw_out;
  sw_cmd->add_option("--config", sw_config, "sweep config json")->required();
  sw_cmd->add_option("--out", sw_out, "output directory")->required();

  auto* rp_cmd = app.add_subcommand("report", "summarize a sweep directory");
  std::string rp_in;
  rp_cmd->add_option("--in", rp_in, "sweep output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd)
      return cmd_gen_data(gd_dim, gd_n, gd_noise, gd_seed, gd_bound, gd_scale, gd_rule,
                          gd_out);

    if (*risk_cmd) {
      ppl::RunConfig cfg = ppl::RunConfig::from_file(rk_config);
      ppl::Dataset S = load_or_generate(cfg, rk_data);
      ppl::MixedLoss m = cfg.mixed_loss(&S);
      Vec w = rk_model ? vec_from_json_file(*rk_model) : Vec::Zero(S.dim());
      ppl::RiskReport rep = ppl::empirical_mixed_risk(S, m, w);
      json j;
      j["tau"] = rep.tau;
      j["r_point_emp"] = rep.r_point_emp;
      j["r_pair_emp"] = rep.r_pair_emp;
      j["r_mixed_emp"] = rep.r_mixed_emp;
      if (rk_population) {
        ppl::PopEstimate pop =
            ppl::population_risk_mc(cfg.generator(), m, w, cfg.n_pop, cfg.pop_seed);
        j["r_mixed_pop_estimate"] = pop.estimate;
        j["pop_std_error"] = pop.std_error;
        j["n_pop"] = pop.n_pop;
      }
      emit(j, rk_out);
      return 0;
    }

    if (*sgd_cmd) {
      ppl::RunConfig cfg = ppl::RunConfig::from_file(ts_config);
      if (ts_tau) cfg.tau = *ts_tau;
      if (ts_eta) cfg.eta = *ts_eta;
      if (ts_T) cfg.T = *ts_T;
      if (ts_seed) cfg.sgd_seed = *ts_seed;
      ppl::Dataset S = load_or_generate(cfg, ts_data);
      ppl::MixedLoss m = cfg.mixed_loss(&S);
      ppl::SgdTrace trace =
          ppl::sgd_run(S, m, cfg.sgd_config(), Vec::Zero(S.dim()));
      emit(vec_to_json(trace.w_final), ts_out);
      return 0;
    }

    if (*rrm_cmd) {
      ppl::RunConfig cfg = ppl::RunConfig::from_file(tr_config);
      if (tr_tau) cfg.tau = *tr_tau;
      if (tr_sigma) cfg.sigma_r = *tr_sigma;
      if (tr_tol) cfg.rrm_tol = *tr_tol;
      ppl::Dataset S = load_or_generate(cfg, tr_data);
      ppl::MixedLoss m = cfg.mixed_loss(&S);
      Vec w = ppl::rrm_solve(S, m, cfg.regularizer(), cfg.rrm_tol, cfg.rrm_max_iters);
      emit(vec_to_json(w), tr_out);
      return 0;
    }

    if (*st_cmd) {
      ppl::RunConfig cfg = ppl::RunConfig::from_file(st_config);
      ppl::SyntheticGenerator gen = cfg.generator();
      ppl::Dataset S = ppl::sample_synthetic(gen, cfg.n);
      ppl::MixedLoss m = cfg.mixed_loss(&S);
      std::vector<ppl::StabilityCell> cells;
      ppl::StabilityEstimate est;
      auto estimate_with = [&](auto trainer) {
        ppl::SyntheticGenerator gp = gen;
        gp.seed = ppl::derive_seed(cfg.stability_seed, 0x70726f62ULL);
        ppl::Dataset probe = ppl::sample_synthetic(gp, cfg.stability.probe_size);
        ppl::UniformStabilityResult u = ppl::uniform_stability_estimate(
            trainer, S, gen, m, probe, cfg.stability.n_replacements,
            cfg.stability.draws_per_index, cfg.stability_seed, &cells);
        est = ppl::on_average_stability(trainer, gen, m, cfg.n, cfg.stability,
                                        cfg.stability_seed, &cells);
        est.u_point = u.u_point;
        est.u_pair = u.u_pair;
        est.probe_size = cfg.stability.probe_size;
        est.n_replacements = cfg.stability.n_replacements;
      };
      if (st_algorithm == "rrm") {
        estimate_with(ppl::RrmTrainer{m, cfg.regularizer(), cfg.rrm_tol, cfg.rrm_max_iters});
      } else if (st_algorithm == "sgd") {
        estimate_with(ppl::SgdTrainer{m, cfg.sgd_config()});
      } else {
        throw ppl::invalid_config_error("unknown algorithm: " + st_algorithm);
      }
      json j;
      j["u_point"] = est.u_point;
      j["u_pair"] = est.u_pair;
      j["v_point"] = est.v_point;
      j["v_pair"] = est.v_pair;
      j["h1_point"] = est.h1_point;
      j["h1_pair"] = est.h1_pair;
      j["h2"] = est.h2;
      j["gamma_uniform"] = est.gamma_uniform();
      j["gamma_loss"] = est.gamma_loss();
      j["gamma_arg_l1"] = est.gamma_arg_l1();
      j["gamma_arg_l2"] = est.gamma_arg_l2();
      j["n"] = est.n;
      j["outer_resamples"] = est.outer_resamples;
      j["probe_size"] = est.probe_size;
      j["n_replacements"] = est.n_replacements;
      j["pair_cap"] = est.pair_cap;
      j["point_cap"] = est.point_cap;
      emit(j, st_json);
      if (st_csv) {
        std::ofstream os(*st_csv);
        if (!os) throw ppl::io_error("cannot open for writing: " + *st_csv);
        os << "def,kind,i,j,trial,value,seed\n";
        for (const ppl::StabilityCell& c : cells)
          os << c.def << ',' << c.kind << ',' << c.i << ',' << c.j << ',' << c.trial
             << ',' << ppl::format_double(c.value) << ',' << c.seed << '\n';
      }
      return 0;
    }

    if (*bd_cmd) {
      using namespace ppl::bounds;
      auto L = [&](const char* k) { return bd[k]; };
      auto n_of = [&](const char* k) { return static_cast<long>(bd[k]); };
      BoundValue v;
      if (bd_theorem == "thm1")
        v = thm1_bound(L("gamma"), L("M"), L("tau"), n_of("n"), L("delta"));
      else if (bd_theorem == "eqstab")
        v = sgd_stability_rhs(L("ind-i"), L("ind-j"), L("L"), L("tau"),
                              bd["parameter-scale"] != 0.0);
      else if (bd_theorem == "thm2hp")
        v = sgd_drift_highprob(L("L"), L("eta"), L("tau"), n_of("t"), n_of("n"),
                               L("delta"));
      else if (bd_theorem == "lemma1")
        v = rrm_stability_const(L("L"), L("sigma"), L("tau"), n_of("n"));
      else if (bd_theorem == "lemma2")
        v = lemma2_bound(L("gamma"), L("tau"), L("sigma"));
      else if (bd_theorem == "lemma3")
        v = bernstein_mixed_bound(L("b"), L("theta"), L("tau"), n_of("n"), L("delta"));
      else if (bd_theorem == "thm4")
        v = thm4_bound(L("b"), L("theta"), L("L"), L("sigma"), L("tau"), n_of("n"),
                       L("delta"));
      else if (bd_theorem == "chernoff")
        v = chernoff_tail(L("mu"), L("delta"));
      else if (bd_theorem == "thm5")
        v = thm5_relation(L("v-point"), L("v-pair"));
      else if (bd_theorem == "cor2")
        v = cor2_relation(L("L"), L("h1-point"), L("h1-pair"));
      else if (bd_theorem == "thm6")
        v = thm6_bound(L("beta"), L("gamma"), L("epsilon"), L("tau"), L("emp-point"),
                       L("emp-pair"), bd["epsilon"] == 0.0);
      else if (bd_theorem == "thm7") {
        Thm7Value t = thm7_bound(L("beta"), L("sigma"), L("epsilon"), L("tau"),
                                 n_of("n"), L("emp-point"), L("emp-pair"));
        json j = bound_to_json(t.bound);
        j["precondition_ok"] = t.precondition_ok;
        emit(j, bd_out);
        return 0;
      } else if (bd_theorem == "lemma4")
        v = lemma4_rhs(L("beta"), L("epsilon"), L("tau"), L("emp-point"), L("emp-pair"),
                       L("mean-sq-drift"));
      else
        throw ppl::invalid_config_error("unknown theorem: " + bd_theorem);
      emit(bound_to_json(v), bd_out);
      return 0;
    }

    if (*sw_cmd) {
      std::ifstream is(sw_config);
      if (!is) throw ppl::io_error("cannot open config: " + sw_config);
      json j;
      is >> j;
      ppl::ExperimentConfig cfg = ppl::ExperimentConfig::from_json(j);
      std::vector<ppl::SweepRow> rows = ppl::run_sweep(cfg, sw_out);
      ppl::ReportResult res = ppl::make_report(rows, sw_out);
      std::cout << res.text;
      return res.ok() ? 0 : 1;
    }

    if (*rp_cmd) {
      std::vector<ppl::SweepRow> rows =
          ppl::read_sweep_csv((std::filesystem::path(rp_in) / "sweep.csv").string());
      ppl::ReportResult res = ppl::make_report(rows, rp_in);
      std::cout << res.text;
      return res.ok() ? 0 : 1;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << std::endl;
    return 2;
  }
  return 0;
}
