#pragma once

// JSON run configuration shared by the CLI subcommands. Schema (all keys
// optional, defaults shown in README):
//   data:        dim, n, noise_std, feature_bound, true_w_scale, true_w,
//                label_rule, seed
//   loss:        pointwise, pairwise, tau, ball_radius, lambda3
//   regularizer: kind ("l2"|"elastic"), sigma_r, lambda2
//   sgd:         T, eta, schedule ("constant"|"inv-sqrt-T"), eta_c,
//                projection_radius, seed
//   rrm:         tol, max_iters
//   stability:   n_replacements, draws_per_index, probe_size,
//                outer_resamples, pair_cap, point_cap, seed
//   population:  n_pop, seed

#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ppl/dataset.hpp"
#include "ppl/errors.hpp"
#include "ppl/loss.hpp"
#include "ppl/optim.hpp"
#include "ppl/risk.hpp"
#include "ppl/stability.hpp"

namespace ppl {

struct RunConfig {
  // data
  int dim = 5;
  long n = 100;
  double noise_std = 0.1;
  double feature_bound = 1.0;
  double true_w_scale = 0.5;
  std::optional<std::vector<double>> true_w;
  std::string label_rule = "linear-regression";
  std::uint64_t data_seed = 42;
  // loss
  std::string loss_point = "squared";
  std::string loss_pair = "squared-ranking";
  double tau = 0.5;
  double ball_radius = 1.0;
  double lambda3 = 0.5;
  // regularizer
  std::string reg_kind = "l2";
  double sigma_r = 1.0;
  double lambda2 = 0.0;
  // sgd
  long T = 500;
  double eta = 0.01;
  std::string schedule = "constant";
  double eta_c = 1.0;
  std::optional<double> projection_radius;
  std::uint64_t sgd_seed = 7;
  // rrm
  double rrm_tol = 0.0;
  long rrm_max_iters = 500000;
  // stability
  StabilityOptions stability;
  std::uint64_t stability_seed = 11;
  // population
  long n_pop = 20000;
  std::uint64_t pop_seed = 13;

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    auto sub = [&](const char* key) -> nlohmann::json {
      return j.contains(key) ? j.at(key) : nlohmann::json::object();
    };
    auto get = [](const nlohmann::json& o, const char* key, auto& field) {
      if (o.contains(key)) field = o.at(key).get<std::decay_t<decltype(field)>>();
    };
    nlohmann::json d = sub("data");
    get(d, "dim", c.dim);
    get(d, "n", c.n);
    get(d, "noise_std", c.noise_std);
    get(d, "feature_bound", c.feature_bound);
    get(d, "true_w_scale", c.true_w_scale);
    get(d, "label_rule", c.label_rule);
    get(d, "seed", c.data_seed);
    if (d.contains("true_w")) c.true_w = d.at("true_w").get<std::vector<double>>();
    nlohmann::json l = sub("loss");
    get(l, "pointwise", c.loss_point);
    get(l, "pairwise", c.loss_pair);
    get(l, "tau", c.tau);
    get(l, "ball_radius", c.ball_radius);
    get(l, "lambda3", c.lambda3);
    nlohmann::json r = sub("regularizer");
    get(r, "kind", c.reg_kind);
    get(r, "sigma_r", c.sigma_r);
    get(r, "lambda2", c.lambda2);
    nlohmann::json s = sub("sgd");
    get(s, "T", c.T);
    get(s, "eta", c.eta);
    get(s, "schedule", c.schedule);
    get(s, "eta_c", c.eta_c);
    get(s, "seed", c.sgd_seed);
    if (s.contains("projection_radius"))
      c.projection_radius = s.at("projection_radius").get<double>();
    nlohmann::json m = sub("rrm");
    get(m, "tol", c.rrm_tol);
    get(m, "max_iters", c.rrm_max_iters);
    nlohmann::json st = sub("stability");
    get(st, "n_replacements", c.stability.n_replacements);
    get(st, "draws_per_index", c.stability.draws_per_index);
    get(st, "probe_size", c.stability.probe_size);
    get(st, "outer_resamples", c.stability.outer_resamples);
    get(st, "pair_cap", c.stability.pair_cap);
    get(st, "point_cap", c.stability.point_cap);
    get(st, "seed", c.stability_seed);
    nlohmann::json p = sub("population");
    get(p, "n_pop", c.n_pop);
    get(p, "seed", c.pop_seed);
    return c;
  }

  static RunConfig from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open config: " + path);
    nlohmann::json j;
    is >> j;
    return from_json(j);
  }

  SyntheticGenerator generator() const {
    if (true_w) {
      SyntheticGenerator gen;
      gen.true_w = Eigen::Map<const Vec>(true_w->data(),
                                         static_cast<Eigen::Index>(true_w->size()));
      gen.feature_bound = feature_bound;
      gen.noise_std = noise_std;
      gen.label_rule = label_rule_from_id(label_rule);
      gen.seed = data_seed;
      gen.validate();
      return gen;
    }
    return make_generator(dim, true_w_scale, feature_bound, noise_std,
                          label_rule_from_id(label_rule), data_seed);
  }

  // link-constraint pair sets are built from the supplied probe data
  MixedLoss mixed_loss(const Dataset* link_probe = nullptr) const {
    PointwiseLoss f = PointwiseLoss::from_id(loss_point);
    PairwiseLoss g = PairwiseLoss::from_id(loss_pair, lambda3, link_probe);
    return MixedLoss(f, g, tau);
  }

  Regularizer regularizer() const {
    if (reg_kind == "l2") return Regularizer::l2(sigma_r);
    if (reg_kind == "elastic") return Regularizer::elastic(sigma_r, lambda2);
    throw invalid_config_error("unknown regularizer kind: " + reg_kind);
  }

  SgdConfig sgd_config() const {
    SgdConfig cfg;
    cfg.T = T;
    cfg.eta = eta;
    cfg.eta_c = eta_c;
    if (schedule == "constant")
      cfg.schedule = StepSchedule::constant;
    else if (schedule == "inv-sqrt-T")
      cfg.schedule = StepSchedule::inv_sqrt_T;
    else
      throw invalid_config_error("unknown sgd schedule: " + schedule);
    cfg.projection_radius = projection_radius;
    cfg.seed = sgd_seed;
    return cfg;
  }
};

}  // namespace ppl
