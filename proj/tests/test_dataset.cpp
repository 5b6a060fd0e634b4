#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "oracles.hpp"
#include "ppl/dataset.hpp"

using namespace ppl;

namespace {

SyntheticGenerator test_gen(int d, double noise, std::uint64_t seed,
                            LabelRule rule = LabelRule::linear_regression) {
  return make_generator(d, 0.5, 1.0, noise, rule, seed);
}

}  // namespace

TEST_CASE("noiseless linear rule is exact") {
  SyntheticGenerator gen = test_gen(4, 0.0, 123);
  Dataset S = sample_synthetic(gen, 200);
  for (const Sample& z : S) REQUIRE(z.y == gen.true_w.dot(z.x));
}

TEST_CASE("same seed gives bit-identical datasets") {
  SyntheticGenerator gen = test_gen(3, 0.2, 77);
  Dataset a = sample_synthetic(gen, 50);
  Dataset b = sample_synthetic(gen, 50);
  REQUIRE(same_dataset(a, b));
}

TEST_CASE("different seeds differ somewhere") {
  SyntheticGenerator a = test_gen(3, 0.2, 77);
  SyntheticGenerator b = test_gen(3, 0.2, 78);
  REQUIRE_FALSE(same_dataset(sample_synthetic(a, 10), sample_synthetic(b, 10)));
}

TEST_CASE("noise mean matches clt tolerance") {
  // empirical mean of y - w*.x over 1e4 draws stays within 4 sigma/sqrt(n)
  SyntheticGenerator gen = test_gen(5, 0.1, 2024);
  Dataset S = sample_synthetic(gen, 10000);
  double acc = 0.0;
  for (const Sample& z : S) acc += z.y - gen.true_w.dot(z.x);
  double mean = acc / double(S.size());
  REQUIRE(std::abs(mean) <= 4.0 * 0.1 / std::sqrt(10000.0));
}

TEST_CASE("feature norms never exceed the bound") {
  SyntheticGenerator gen = test_gen(5, 0.0, 99);
  Dataset S = sample_synthetic(gen, 100000);
  for (const Sample& z : S) REQUIRE(z.x.norm() <= gen.feature_bound + 1e-15);
}

TEST_CASE("sign labels are plus minus one") {
  SyntheticGenerator gen = test_gen(3, 0.3, 5, LabelRule::sign);
  for (const Sample& z : sample_synthetic(gen, 100))
    REQUIRE((z.y == 1.0 || z.y == -1.0));
}

TEST_CASE("invalid generator parameters are rejected") {
  SyntheticGenerator gen = test_gen(3, 0.1, 1);
  gen.noise_std = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(sample_synthetic(gen, 5), invalid_config_error);
  gen = test_gen(3, 0.1, 1);
  gen.feature_bound = -1.0;
  REQUIRE_THROWS_AS(sample_synthetic(gen, 5), invalid_config_error);
  REQUIRE_THROWS_AS(sample_synthetic(test_gen(3, 0.1, 1), 0), invalid_input_error);
}

TEST_CASE("neighbor replacement at one position") {
  Dataset S = oracles::scalar_dataset({{1, 10}, {2, 20}, {3, 30}});
  Sample zp = oracles::scalar_sample(9, 90);

  // position 1 here is the paper's i=2 in 1-based counting
  Dataset Si = make_neighbor_i(S, 1, zp);
  REQUIRE(same_sample(Si[0], S[0]));
  REQUIRE(same_sample(Si[1], zp));
  REQUIRE(same_sample(Si[2], S[2]));

  SECTION("input is untouched") {
    Dataset before = S;
    (void)make_neighbor_i(S, 0, zp);
    REQUIRE(same_dataset(S, before));
  }
  SECTION("replacing with itself is the identity") {
    REQUIRE(same_dataset(make_neighbor_i(S, 1, S[1]), S));
  }
  SECTION("double replacement restores the original") {
    REQUIRE(same_dataset(make_neighbor_i(make_neighbor_i(S, 1, zp), 1, S[1]), S));
  }
  SECTION("errors") {
    REQUIRE_THROWS_AS(make_neighbor_i(S, 3, zp), index_error);
    Sample bad;
    bad.x = Vec::Zero(2);
    REQUIRE_THROWS_AS(make_neighbor_i(S, 0, bad), invalid_input_error);
  }
}

TEST_CASE("neighbor replacement at two positions") {
  Dataset S = oracles::scalar_dataset({{1, 10}, {2, 20}, {3, 30}});
  Sample zi = oracles::scalar_sample(-1, -10);
  Sample zj = oracles::scalar_sample(-3, -30);

  // positions 0 and 2 here are the paper's i=1 < j=3
  Dataset Sij = make_neighbor_ij(S, 0, 2, zi, zj);
  REQUIRE(same_sample(Sij[0], zi));
  REQUIRE(same_sample(Sij[1], S[1]));
  REQUIRE(same_sample(Sij[2], zj));

  SECTION("composition of single replacements") {
    Dataset composed = make_neighbor_i(make_neighbor_i(S, 0, zi), 2, zj);
    REQUIRE(same_dataset(composed, Sij));
  }
  SECTION("replacing with originals is the identity") {
    REQUIRE(same_dataset(make_neighbor_ij(S, 0, 2, S[0], S[2]), S));
  }
  SECTION("errors") {
    REQUIRE_THROWS_AS(make_neighbor_ij(S, 2, 0, zi, zj), ordering_error);
    REQUIRE_THROWS_AS(make_neighbor_ij(S, 1, 1, zi, zj), ordering_error);
    REQUIRE_THROWS_AS(make_neighbor_ij(S, 0, 3, zi, zj), index_error);
  }
}

TEST_CASE("replacement draws are deterministic and fresh") {
  SyntheticGenerator gen = test_gen(3, 0.1, 11);
  Sample a = gen.draw_replacement(4, 0);
  Sample b = gen.draw_replacement(4, 0);
  REQUIRE(same_sample(a, b));
  REQUIRE_FALSE(same_sample(a, gen.draw_replacement(5, 0)));
  // replacement stream is disjoint from the dataset stream
  Dataset S = sample_synthetic(gen, 10);
  for (const Sample& z : S) REQUIRE_FALSE(same_sample(z, a));
}

TEST_CASE("csv round trip is lossless") {
  SyntheticGenerator gen = test_gen(4, 0.37, 314);
  Dataset S = sample_synthetic(gen, 64);
  std::stringstream ss;
  write_csv(S, ss);
  Dataset back = read_csv(ss);
  REQUIRE(back.size() == S.size());
  REQUIRE(same_dataset(back, S));
}

TEST_CASE("csv rejects malformed input") {
  std::stringstream empty;
  REQUIRE_THROWS_AS(read_csv(empty), io_error);
  std::stringstream bad_header("a,b\n1,2\n");
  REQUIRE_THROWS_AS(read_csv(bad_header), io_error);
  std::stringstream ragged("x0,y\n1\n");
  REQUIRE_THROWS_AS(read_csv(ragged), io_error);
}
