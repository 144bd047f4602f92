#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <map>
#include <stdexcept>
#include <vector>

#include "rrlaws/channel_sim.hpp"
#include "rrlaws/predict.hpp"

using namespace rrlaws;

namespace {

// 0.999 quantiles of the chi-square distribution, frozen references
constexpr double kChi2Crit3 = 16.26623619623813;
constexpr double kChi2Crit5 = 20.515005652432873;

}  // namespace

TEST_CASE("substreams are independent of draw history") {
  SubstreamRng a(7, 3, 41);
  SubstreamRng b(7, 3, 41);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  SubstreamRng c(7, 3, 42);
  CHECK(c.next_u64() != SubstreamRng(7, 3, 41).next_u64());
  // unit draws stay in [0, 1)
  SubstreamRng d(1, 2, 3);
  for (int i = 0; i < 1000; ++i) {
    const double u = d.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("beta and binomial sampling moments") {
  SubstreamRng rng(123, 0, 0);
  double sum = 0.0, sum2 = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const double t = rng.next_beta(2.0, 3.0);
    sum += t;
    sum2 += t * t;
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  CHECK(mean == doctest::Approx(0.4).epsilon(5e-3));          // alpha/(alpha+beta)
  CHECK(var == doctest::Approx(0.04).epsilon(3e-2));          // ab/((a+b)^2(a+b+1))
  double ksum = 0.0;
  for (int i = 0; i < draws; ++i) ksum += static_cast<double>(rng.next_binomial(10, 0.3));
  CHECK(ksum / draws == doctest::Approx(3.0).epsilon(5e-3));
}

TEST_CASE("sample_top1_index degenerate marginals") {
  const TopOneMarginals delta({1.0, 0.0, 0.0});
  SubstreamRng rng(9, 9, 9);
  for (int i = 0; i < 200; ++i) CHECK(sample_top1_index(delta, rng) == 1);
}

TEST_CASE("sample_top1_index chi-square on the uniform distribution") {
  const TopOneMarginals uniform(std::vector<double>(4, 0.25));
  const Top1Sampler sampler(uniform);
  std::vector<long long> counts(4, 0);
  const long long draws = 1000000;
  SubstreamRng rng(2024, 1, 1);
  for (long long i = 0; i < draws; ++i) ++counts[sampler.draw(rng) - 1];
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / 4.0;
  for (long long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < kChi2Crit3);
}

TEST_CASE("sample_top1_index frequencies match the Mallows marginals") {
  const auto marginals = mallows_top1_marginals(std::log(2.0), 3);
  const Top1Sampler sampler(marginals);
  std::vector<long long> counts(3, 0);
  const long long draws = 1000000;
  SubstreamRng rng(5150, 2, 2);
  for (long long i = 0; i < draws; ++i) ++counts[sampler.draw(rng) - 1];
  for (std::size_t j = 0; j < 3; ++j) {
    const double p = marginals.at_rank(j + 1);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
    CHECK(std::abs(counts[j] / static_cast<double>(draws) - p) <= 3.0 * se);
  }
}

TEST_CASE("mallows permutation sampler") {
  SUBCASE("uniform at lambda = 0") {
    std::map<std::vector<int>, long long> counts;
    const long long draws = 600000;
    SubstreamRng rng(31, 0, 0);
    for (long long i = 0; i < draws; ++i) ++counts[sample_mallows_permutation(0.0, 3, rng).ranks()];
    REQUIRE(counts.size() == 6);
    double chi2 = 0.0;
    const double expected = static_cast<double>(draws) / 6.0;
    for (const auto& [perm, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < kChi2Crit5);
  }
  SUBCASE("concentrates on the identity at large lambda") {
    SubstreamRng rng(77, 0, 0);
    long long identity_count = 0;
    const long long draws = 10000;
    const auto id = Permutation::identity(5).ranks();
    for (long long i = 0; i < draws; ++i) {
      if (sample_mallows_permutation(20.0, 5, rng).ranks() == id) ++identity_count;
    }
    CHECK(static_cast<double>(identity_count) / static_cast<double>(draws) >= 0.999);
  }
  SUBCASE("frequencies match exp(-lambda d)/Z") {
    const double lambda = 1.0;
    const double z = mallows_partition(lambda, 3);
    std::map<std::vector<int>, long long> counts;
    const long long draws = 1000000;
    SubstreamRng rng(404, 0, 0);
    const Permutation id = Permutation::identity(3);
    for (long long i = 0; i < draws; ++i) ++counts[sample_mallows_permutation(lambda, 3, rng).ranks()];
    REQUIRE(counts.size() == 6);
    for (const auto& [ranks, c] : counts) {
      const int d = kendall_tau_distance(Permutation(std::vector<int>(ranks)), id);
      const double p = std::exp(-lambda * d) / z;
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
      CHECK(std::abs(c / static_cast<double>(draws) - p) <= 4.0 * se);
    }
  }
}

TEST_CASE("top-1 sampling and full-permutation sampling agree") {
  // the pick's oracle rank from a sampled ranking follows the top-1 marginals
  const double lambda = 0.8;
  for (int n : {2, 4, 6}) {
    const auto marginals = mallows_top1_marginals(lambda, n);
    std::vector<long long> counts(n, 0);
    const long long draws = 200000;
    SubstreamRng rng(n, 17, 17);
    for (long long i = 0; i < draws; ++i) {
      const Permutation pi = sample_mallows_permutation(lambda, n, rng);
      ++counts[pi.position_of_rank(1) - 1];
    }
    for (int j = 0; j < n; ++j) {
      const double p = marginals.at_rank(j + 1);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
      CHECK(std::abs(counts[j] / static_cast<double>(draws) - p) <= 4.0 * se);
    }
  }
}

TEST_CASE("simulate_curve basics") {
  SimConfig config;
  config.generator = IndependentGenerator{0.0};
  config.reranker = RandomReranker{};
  config.n_grid = {1, 2, 5};
  config.trials = 2000;
  config.seed = 11;
  const FailureCurve curve = simulate_curve(config);
  for (const auto& pt : curve.points) CHECK(pt.failure_rate == 0.0);
}

TEST_CASE("simulate_curve matches the analytic laws") {
  SUBCASE("independent + perfect at n = 5") {
    SimConfig config;
    config.generator = IndependentGenerator{0.3};
    config.reranker = PerfectReranker{};
    config.n_grid = {5};
    config.trials = 1000000;
    config.seed = 99;
    const FailureCurve curve = simulate_curve(config);
    CHECK(*curve.points[0].ci_low <= 0.00243);
    CHECK(*curve.points[0].ci_high >= 0.00243);
  }
  SUBCASE("beta(1,1) + perfect at n = 3") {
    SimConfig config;
    config.generator = BetaCoupledGenerator{1.0, 1.0};
    config.reranker = PerfectReranker{};
    config.n_grid = {3};
    config.trials = 1000000;
    config.seed = 7;
    const FailureCurve curve = simulate_curve(config);
    CHECK(*curve.points[0].ci_low <= 0.25);
    CHECK(*curve.points[0].ci_high >= 0.25);
  }
}

TEST_CASE("simulation is deterministic and thread-count independent") {
  SimConfig config;
  config.generator = BetaCoupledGenerator{0.5, 1.5};
  config.reranker = ZipfMandelbrotReranker{1.0, 0.5};
  config.n_grid = {1, 3, 9};
  config.trials = 30000;
  config.seed = 42;
  config.threads = 1;
  const FailureCurve one = simulate_curve(config);
  config.threads = 4;
  const FailureCurve four = simulate_curve(config);
  config.threads = 7;
  const FailureCurve seven = simulate_curve(config);
  REQUIRE(one.points.size() == four.points.size());
  for (std::size_t i = 0; i < one.points.size(); ++i) {
    CHECK(one.points[i].failure_rate == four.points[i].failure_rate);
    CHECK(one.points[i].failure_rate == seven.points[i].failure_rate);
    CHECK(*one.points[i].ci_low == *four.points[i].ci_low);
    CHECK(*one.points[i].ci_high == *seven.points[i].ci_high);
  }
}

TEST_CASE("oracle agreement across generator/reranker pairs") {
  // 99% intervals should cover the analytic value in >= 95% of grid points
  const std::vector<GeneratorSpec> generators = {IndependentGenerator{0.3},
                                                 BetaCoupledGenerator{1.0, 1.0},
                                                 BetaCoupledGenerator{0.5, 2.0}};
  const std::vector<RerankerSpec> rerankers = {
      PerfectReranker{}, RandomReranker{}, MallowsReranker{-std::log(0.5)},
      ZipfMandelbrotReranker{-std::log(0.5), 0.5}, PolynomialReranker{2}};
  int covered = 0, total = 0;
  for (const auto& g : generators) {
    for (const auto& r : rerankers) {
      SimConfig config;
      config.generator = g;
      config.reranker = r;
      config.n_grid = {1, 3, 5, 10, 20};
      config.trials = 1000000;
      config.seed = 1234;
      config.threads = 4;
      const FailureCurve curve = simulate_curve(config);
      for (const auto& pt : curve.points) {
        const double truth = law_value(g, r, pt.n).value();
        ++total;
        if (truth >= *pt.ci_low && truth <= *pt.ci_high) ++covered;
      }
    }
  }
  CHECK(static_cast<double>(covered) >= 0.95 * static_cast<double>(total));
}

TEST_CASE("beta-coupled curves are non-increasing for error-free rerankers") {
  const std::vector<RerankerSpec> rerankers = {PerfectReranker{}, MallowsReranker{1.0},
                                               ZipfMandelbrotReranker{1.0, 0.5}};
  for (const auto& r : rerankers) {
    // the analytic law decreases exactly
    double prev = 1.1;
    for (long long n = 1; n <= 40; ++n) {
      const double v = law_value(BetaCoupledGenerator{1.0, 1.0}, r, n).value();
      CHECK(v <= prev * (1.0 + 1e-12));
      prev = v;
    }
    // the simulated curve decreases up to interval noise
    SimConfig config;
    config.generator = BetaCoupledGenerator{1.0, 1.0};
    config.reranker = r;
    config.n_grid = {1, 2, 4, 8, 16, 32};
    config.trials = 200000;
    config.seed = 5;
    config.threads = 4;
    const FailureCurve curve = simulate_curve(config);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
      CHECK(curve.points[i].failure_rate <= *curve.points[i - 1].ci_high + 1e-6);
    }
  }
}

TEST_CASE("simulate_curve validation") {
  SimConfig config;
  config.generator = IndependentGenerator{0.3};
  config.reranker = PerfectReranker{};
  config.n_grid = {3, 2};
  CHECK_THROWS_AS(simulate_curve(config), std::invalid_argument);
  config.n_grid = {1, 2};
  config.trials = 0;
  CHECK_THROWS_AS(simulate_curve(config), std::invalid_argument);
  config.trials = 1000;
  config.draw_budget = 10;
  CHECK_THROWS_AS(simulate_curve(config), std::invalid_argument);
}
