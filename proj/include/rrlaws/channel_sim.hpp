#pragma once

#include <cstdint>
#include <vector>

#include "rrlaws/curve.hpp"
#include "rrlaws/error_laws.hpp"
#include "rrlaws/rank_models.hpp"

namespace rrlaws {

// Counter-based substream: the state is a hash of (seed, key_a, key_b), so any
// (n, trial) pair owns an independent stream and parallel execution cannot
// reorder draws.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b);

  std::uint64_t next_u64();
  double next_unit();  // [0, 1)
  double next_normal();
  double next_gamma(double shape);
  double next_beta(double alpha, double beta);
  long long next_binomial(long long n, double p);

 private:
  std::uint64_t state_;
};

struct SimConfig {
  GeneratorSpec generator;
  RerankerSpec reranker;
  std::vector<long long> n_grid;
  std::uint64_t trials = 10000;
  std::uint64_t seed = 0;
  double ci_level = 0.99;
  int threads = 1;
  std::uint64_t draw_budget = 20000000000ull;  // cap on trials * sum(n)
};

// Inverse-CDF sampler over oracle ranks, precomputed suffix sums.
class Top1Sampler {
 public:
  explicit Top1Sampler(const TopOneMarginals& marginals);
  long long draw(SubstreamRng& rng) const;  // rank in [1, n]

 private:
  std::vector<double> suffix_;  // suffix_[k] = P(rank > k), decreasing
};

long long sample_top1_index(const TopOneMarginals& marginals, SubstreamRng& rng);

// Repeated-insertion sampler for the Mallows ranking model with identity
// center: item i lands at position j in 1..i with weight e^{-lambda (i-j)}.
Permutation sample_mallows_permutation(double lambda, int n, SubstreamRng& rng);

// Monte-Carlo failure curve. Per trial: draw the corruption probability tau,
// the unacceptable count K ~ Binomial(n, tau), and the pick's oracle rank;
// the trial fails iff the rank exceeds n - K. Fully determined by the seed.
FailureCurve simulate_curve(const SimConfig& config);

}  // namespace rrlaws
