#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "owssl/numerics.hpp"
#include "owssl/rng.hpp"
#include "owssl/uncertainty.hpp"
#include "test_support.hpp"

using namespace owssl;

namespace {

AugmentFn identity_augment() {
  return [](std::span<const double> x, RngStream&) {
    return std::vector<double>(x.begin(), x.end());
  };
}

}  // namespace

TEST_CASE("mc_variance: identical predictions give zero") {
  UncertaintyConfig cfg;
  cfg.mc_samples = 8;
  const PredictFn constant = [](std::span<const double>) {
    return std::vector<double>{0.25, 0.75};
  };
  const std::vector<double> x{1.0, 2.0};
  const auto var = mc_variance(constant, x, identity_augment(), cfg, RngStream(1, 1));
  CHECK(var[0] == 0.0);
  CHECK(var[1] == 0.0);

  const PredictFn constant2 = [](std::span<const double>) {
    return std::vector<double>{0.3, 0.7};
  };
  const auto var2 = mc_variance(constant2, x, identity_augment(), cfg, RngStream(1, 1));
  CHECK(var2[0] <= 1e-30);
  CHECK(var2[1] <= 1e-30);
}

TEST_CASE("mc_variance: two opposite one-hot draws") {
  UncertaintyConfig cfg;
  cfg.mc_samples = 2;
  int call = 0;
  const PredictFn flip = [&call](std::span<const double>) {
    return (call++ % 2 == 0) ? std::vector<double>{1.0, 0.0}
                             : std::vector<double>{0.0, 1.0};
  };
  const std::vector<double> x{0.0};
  const auto var = mc_variance(flip, x, identity_augment(), cfg, RngStream(1, 2));
  CHECK(var[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(var[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("mc_variance matches the brute-force oracle and is draw-order invariant") {
  UncertaintyConfig cfg;
  cfg.mc_samples = 5;
  RngStream gen(9, 9);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> draws;
    for (int t = 0; t < 5; ++t) {
      std::vector<double> z(4);
      for (double& v : z) v = gen.uniform(-2.0, 2.0);
      draws.push_back(softmax(z));
    }
    int call = 0;
    const PredictFn replay = [&](std::span<const double>) { return draws[call++]; };
    const std::vector<double> x{0.0};
    const auto var = mc_variance(replay, x, identity_augment(), cfg, RngStream(1, 3));
    const auto oracle = test_support::variance_oracle(draws);
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(var[j] - oracle[j]) <= 1e-12);

    std::reverse(draws.begin(), draws.end());
    call = 0;
    const auto var_rev = mc_variance(replay, x, identity_augment(), cfg, RngStream(1, 3));
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(var_rev[j] == doctest::Approx(var[j]).epsilon(1e-13));
  }
}

TEST_CASE("mc_variance validates predictions") {
  UncertaintyConfig cfg;
  const PredictFn broken = [](std::span<const double>) {
    return std::vector<double>{0.8, 0.8};
  };
  const std::vector<double> x{0.0};
  CHECK_THROWS(mc_variance(broken, x, identity_augment(), cfg, RngStream(1, 4)));
  UncertaintyConfig bad;
  bad.mc_samples = 1;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("reduce_uncertainty") {
  CHECK(reduce_uncertainty(std::vector<double>{0.0, 0.0, 0.0}) == 0.0);
  CHECK(reduce_uncertainty(std::vector<double>{0.25, 0.25}) == doctest::Approx(0.25));
  CHECK(reduce_uncertainty(std::vector<double>{0.1, 0.2, 0.3}) == doctest::Approx(0.2));
  CHECK(reduce_uncertainty(std::vector<double>{0.1, 0.4, 0.3}, UncertaintyReduce::kMax) ==
        doctest::Approx(0.4));
  CHECK(reduce_uncertainty(std::vector<double>{0.1, 0.4, 0.3},
                           UncertaintyReduce::kArgmaxClass, 2) == doctest::Approx(0.3));
  CHECK_THROWS(reduce_uncertainty(std::vector<double>{}));
  CHECK_THROWS(reduce_uncertainty(std::vector<double>{-0.1}));
}

TEST_CASE("normalize_and_clip") {
  UncertaintyConfig cfg;  // clip [0.1, 1.0]
  auto out = normalize_and_clip(std::vector<double>{0.02, 0.04}, cfg);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-15));

  out = normalize_and_clip(std::vector<double>{0.001, 0.04}, cfg);
  CHECK(out[0] == doctest::Approx(0.1).epsilon(1e-15));  // 0.025 clamped up
  CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-15));

  out = normalize_and_clip(std::vector<double>{0.03, 0.03, 0.03}, cfg);
  for (double v : out) CHECK(v == doctest::Approx(1.0).epsilon(1e-15));

  out = normalize_and_clip(std::vector<double>{0.0, 0.0}, cfg);
  for (double v : out) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("normalize_and_clip max is 1 whenever input has mass") {
  UncertaintyConfig cfg;
  RngStream rng(3, 14);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> raw(1 + rng.next_below(64));
    for (double& v : raw) v = rng.uniform(0.0, 0.2);
    raw[rng.next_below(raw.size())] = rng.uniform(0.01, 0.2);
    const auto out = normalize_and_clip(raw, cfg);
    CHECK(*std::max_element(out.begin(), out.end()) == doctest::Approx(1.0));
    for (double v : out) {
      CHECK(v >= 0.1);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("uncertainty_softmax fixed values and errors") {
  auto p = uncertainty_softmax(std::vector<double>{0.0, 0.0}, 1.0);
  CHECK(p[0] == doctest::Approx(0.5));
  auto q = uncertainty_softmax(std::vector<double>{2.0, 0.0}, 0.5);
  CHECK(q[0] == doctest::Approx(0.98201).epsilon(1e-4));
  CHECK(q[1] == doctest::Approx(0.01799).epsilon(1e-3));
  CHECK_THROWS(uncertainty_softmax(std::vector<double>{1.0}, 0.0));
  CHECK_THROWS(uncertainty_softmax(std::vector<double>{1.0}, -0.4));
}

TEST_CASE("entropy is non-decreasing in u; argmax invariant") {
  RngStream rng(41, 0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> z(2 + rng.next_below(8));
    for (double& v : z) v = rng.uniform(-4.0, 4.0);
    const auto base_argmax =
        std::max_element(z.begin(), z.end()) - z.begin();
    double prev = -1.0;
    for (int g = 0; g < 10; ++g) {
      const double u = 0.1 + 0.1 * g;
      const auto p = uncertainty_softmax(z, u);
      const double h = entropy(p);
      CHECK(h >= prev - 1e-12);
      prev = h;
      CHECK(std::max_element(p.begin(), p.end()) - p.begin() == base_argmax);
    }
  }
}
