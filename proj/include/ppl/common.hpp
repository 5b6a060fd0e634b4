#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <system_error>

#include "ppl/errors.hpp"

namespace ppl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// splitmix64 step; used to derive independent sub-seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(base ^ 0x8e9c1f0563a4b97dULL);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return s;
}

// Smallest k with 2^k >= n. Exact integer arithmetic, never floating log.
inline int ceil_log2(std::uint64_t n) {
  if (n == 0) throw domain_error("ceil_log2: n must be >= 1");
  int k = 0;
  std::uint64_t p = 1;
  while (p < n) {
    p <<= 1;
    ++k;
  }
  return k;
}

// Shortest decimal form that round-trips through from_chars.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw io_error("failed to parse number: '" + std::string(s) + "'");
  return v;
}

inline long parse_long(std::string_view s) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw io_error("failed to parse integer: '" + std::string(s) + "'");
  return v;
}

inline double sqr(double x) { return x * x; }

// Uniform point in the l2 ball of the given radius.
inline Vec random_in_ball(std::mt19937_64& rng, Eigen::Index dim, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  for (Eigen::Index k = 0; k < dim; ++k) v[k] = normal(rng);
  double nrm = v.norm();
  if (nrm == 0.0) return Vec::Zero(dim);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  return v * (r / nrm);
}

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += sqr(x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace ppl
