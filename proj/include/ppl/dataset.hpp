#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ppl/common.hpp"
#include "ppl/errors.hpp"

namespace ppl {

struct Sample {
  Vec x;
  double y = 0.0;
};

inline bool same_sample(const Sample& a, const Sample& b) {
  if (a.x.size() != b.x.size() || a.y != b.y) return false;
  for (Eigen::Index k = 0; k < a.x.size(); ++k)
    if (a.x[k] != b.x[k]) return false;
  return true;
}

// Immutable ordered training set. Neighbor construction always copies.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<Sample> samples, std::string provenance)
      : samples_(std::move(samples)), provenance_(std::move(provenance)) {
    if (!samples_.empty()) {
      dim_ = samples_.front().x.size();
      for (const Sample& z : samples_) {
        if (z.x.size() != dim_)
          throw invalid_input_error("dataset: inconsistent sample dimension");
        if (!z.x.allFinite() || !std::isfinite(z.y))
          throw invalid_input_error("dataset: non-finite sample entry");
      }
    }
  }

  std::size_t size() const { return samples_.size(); }
  Eigen::Index dim() const { return dim_; }
  bool empty() const { return samples_.empty(); }

  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  const Sample& at(std::size_t i) const {
    if (i >= samples_.size()) throw index_error("dataset index out of range");
    return samples_[i];
  }

  const std::vector<Sample>& samples() const { return samples_; }
  const std::string& provenance() const { return provenance_; }

  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

 private:
  std::vector<Sample> samples_;
  Eigen::Index dim_ = 0;
  std::string provenance_;
};

inline bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_sample(a[i], b[i])) return false;
  return true;
}

enum class LabelRule { linear_regression, sign };

inline std::string label_rule_id(LabelRule r) {
  return r == LabelRule::linear_regression ? "linear-regression" : "sign";
}

inline LabelRule label_rule_from_id(const std::string& id) {
  if (id == "linear-regression") return LabelRule::linear_regression;
  if (id == "sign") return LabelRule::sign;
  throw invalid_config_error("unknown label rule: " + id);
}

// Bounded-support stand-in for the data distribution: features are N(0, I_d)
// radially clamped into the ball of radius feature_bound, labels are
// true_w.x + noise (or its sign). Each sample draws from its own sub-seeded
// engine, so streams are reproducible and prefix-stable in n.
struct SyntheticGenerator {
  Vec true_w;
  double feature_bound = 1.0;
  double noise_std = 0.0;
  LabelRule label_rule = LabelRule::linear_regression;
  std::uint64_t seed = 0;

  void validate() const {
    if (true_w.size() == 0) throw invalid_config_error("generator: empty true_w");
    if (!true_w.allFinite() || !std::isfinite(feature_bound) || !std::isfinite(noise_std))
      throw invalid_config_error("generator: non-finite parameter");
    if (feature_bound <= 0.0) throw invalid_config_error("generator: feature_bound must be > 0");
    if (noise_std < 0.0) throw invalid_config_error("generator: noise_std must be >= 0");
  }

  Eigen::Index dim() const { return true_w.size(); }

  Sample draw(std::uint64_t sub_seed) const {
    std::mt19937_64 rng(sub_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec x(true_w.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = normal(rng);
    double nrm = x.norm();
    if (nrm > feature_bound) x *= feature_bound / nrm;
    double noise = noise_std > 0.0 ? noise_std * normal(rng) : 0.0;
    double raw = true_w.dot(x) + noise;
    Sample z;
    z.x = std::move(x);
    z.y = label_rule == LabelRule::linear_regression ? raw : (raw >= 0.0 ? 1.0 : -1.0);
    return z;
  }

  // Fresh replacement draw, on a stream disjoint from sample_synthetic's.
  Sample draw_replacement(std::uint64_t tag_a, std::uint64_t tag_b = 0) const {
    validate();
    return draw(derive_seed(seed, 0x7265706cULL /*"repl"*/, tag_a, tag_b));
  }
};

inline SyntheticGenerator make_generator(Eigen::Index dim, double true_w_scale,
                                         double feature_bound, double noise_std,
                                         LabelRule rule, std::uint64_t seed) {
  SyntheticGenerator gen;
  gen.true_w = Vec::Constant(dim, true_w_scale / std::sqrt(static_cast<double>(dim)));
  gen.feature_bound = feature_bound;
  gen.noise_std = noise_std;
  gen.label_rule = rule;
  gen.seed = seed;
  gen.validate();
  return gen;
}

inline Dataset sample_synthetic(const SyntheticGenerator& gen, long n) {
  gen.validate();
  if (n < 1) throw invalid_input_error("sample_synthetic: n must be >= 1");
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i)
    samples.push_back(gen.draw(derive_seed(gen.seed, 0x64617461ULL /*"data"*/, static_cast<std::uint64_t>(i))));
  std::ostringstream prov;
  prov << "synthetic(seed=" << gen.seed << ",n=" << n << ")";
  return Dataset(std::move(samples), prov.str());
}

// S with position i (0-based) replaced; S itself is untouched.
inline Dataset make_neighbor_i(const Dataset& S, std::size_t i, const Sample& z_new) {
  if (i >= S.size()) throw index_error("make_neighbor_i: index out of range");
  if (z_new.x.size() != S.dim())
    throw invalid_input_error("make_neighbor_i: replacement dimension mismatch");
  std::vector<Sample> samples(S.samples());
  samples[i] = z_new;
  return Dataset(std::move(samples), S.provenance() + ";S_" + std::to_string(i));
}

inline Dataset make_neighbor_ij(const Dataset& S, std::size_t i, std::size_t j,
                                const Sample& z_i_new, const Sample& z_j_new) {
  if (i >= j) throw ordering_error("make_neighbor_ij: requires i < j");
  if (j >= S.size()) throw index_error("make_neighbor_ij: index out of range");
  if (z_i_new.x.size() != S.dim() || z_j_new.x.size() != S.dim())
    throw invalid_input_error("make_neighbor_ij: replacement dimension mismatch");
  std::vector<Sample> samples(S.samples());
  samples[i] = z_i_new;
  samples[j] = z_j_new;
  return Dataset(std::move(samples),
                 S.provenance() + ";S_" + std::to_string(i) + "_" + std::to_string(j));
}

// CSV layout: header x0,...,x{d-1},y then one row per sample, with shortest
// round-trip decimal printing so write/read is lossless.
inline void write_csv(const Dataset& S, std::ostream& os) {
  const Eigen::Index d = S.dim();
  for (Eigen::Index k = 0; k < d; ++k) os << 'x' << k << ',';
  os << "y\n";
  for (const Sample& z : S) {
    for (Eigen::Index k = 0; k < d; ++k) os << format_double(z.x[k]) << ',';
    os << format_double(z.y) << '\n';
  }
}

inline void write_csv(const Dataset& S, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open for writing: " + path);
  write_csv(S, os);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline Dataset read_csv(std::istream& is, const std::string& name = "<stream>") {
  std::string line;
  if (!std::getline(is, line)) throw io_error("empty csv: " + name);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "y")
    throw io_error("bad csv header in " + name);
  const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 1;
  for (Eigen::Index k = 0; k < d; ++k)
    if (header[static_cast<std::size_t>(k)] != "x" + std::to_string(k))
      throw io_error("bad csv header in " + name);
  std::vector<Sample> samples;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw io_error("csv row width mismatch in " + name);
    Sample z;
    z.x.resize(d);
    for (Eigen::Index k = 0; k < d; ++k)
      z.x[k] = parse_double(fields[static_cast<std::size_t>(k)]);
    z.y = parse_double(fields.back());
    samples.push_back(std::move(z));
  }
  return Dataset(std::move(samples), "csv:" + name);
}

inline Dataset read_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open: " + path);
  return read_csv(is, path);
}

}  // namespace ppl
