#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rrlaws {

// ---------------------------------------------------------------------------
// Reranker families. The top pick's oracle rank fully determines failure, so
// every family reduces to a distribution over oracle ranks (TopOneMarginals).
// ---------------------------------------------------------------------------

struct PerfectReranker {};
struct RandomReranker {};
struct MallowsReranker {
  double lambda = 0.0;  // >= 0; 0 is random, +inf is perfect
};
struct ZipfMandelbrotReranker {
  double lambda = 1.0;  // > 0
  double gamma = 0.5;   // in (0, 1]; 1 recovers the Mallows marginals
};
struct PolynomialReranker {
  int r = 1;  // weight exponent, eta_j proportional to (n-j+1)^r
};
struct ExplicitReranker {
  std::vector<double> marginals;
};

using RerankerSpec = std::variant<PerfectReranker, RandomReranker, MallowsReranker,
                                  ZipfMandelbrotReranker, PolynomialReranker, ExplicitReranker>;

void validate_reranker(const RerankerSpec& spec);

// eta[j-1] = probability that the reranker's top pick has oracle rank j.
// Entries are nonnegative and sum to 1 within 1e-10.
class TopOneMarginals {
 public:
  explicit TopOneMarginals(std::vector<double> eta);

  std::size_t size() const { return eta_.size(); }
  double at_rank(std::size_t j) const;  // 1-based oracle rank
  const std::vector<double>& values() const { return eta_; }

 private:
  std::vector<double> eta_;
};

// A ranking: ranks()[i] is the rank given to the hypothesis at position i.
class Permutation {
 public:
  explicit Permutation(std::vector<int> ranks);
  static Permutation identity(int n);
  static Permutation reversed(int n);

  int size() const { return static_cast<int>(ranks_.size()); }
  int rank_at(int position) const;      // 1-based position
  int position_of_rank(int rank) const; // 1-based rank
  const std::vector<int>& ranks() const { return ranks_; }

 private:
  std::vector<int> ranks_;
};

// Number of discordant pairs (adjacent-transposition distance).
int kendall_tau_distance(const Permutation& a, const Permutation& b);

// Z(lambda) = prod_{j=1..n} (1 - e^{-lambda j}) / (1 - e^{-lambda}); n! at lambda = 0.
double mallows_partition(double lambda, int n);

// eta_j = e^{-lambda (j-1)} / sum_r e^{-lambda (r-1)}. Stable for lambda*n up to 1e4.
TopOneMarginals mallows_top1_marginals(double lambda, long long n);

struct BruteForceMallows {
  TopOneMarginals marginals;
  double weight_sum;  // unnormalized total, equals the partition function
};

// Enumerates all n! rankings; n <= 8.
BruteForceMallows brute_force_mallows(double lambda, int n);
TopOneMarginals brute_force_mallows_marginals(double lambda, int n);

// softmax at gamma = 1 (or within 1e-6 of it); otherwise
// [1 + (gamma-1)(scores - tau)]_+^{1/(gamma-1)} with tau found by bisection
// so the result sums to 1 within 1e-12.
std::vector<double> entmax(std::span<const double> scores, double gamma);

// entmax(-lambda * (0, 1, ..., n-1), gamma); heavy-tailed power law for gamma < 1.
TopOneMarginals zipf_mandelbrot_top1_marginals(double lambda, double gamma, long long n);

// eta_j = (n-j+1)^r / sum_k k^r, accumulated in extended precision. n <= 1e6, r <= 8.
TopOneMarginals polynomial_top1_marginals(int r, long long n);

// Mass on the k worst oracle ranks, summed from the tail. k in [0, n].
double suffix_mass(const TopOneMarginals& marginals, std::size_t k);

// masses[k] = suffix_mass(marginals, k) for k = 0..n, one backward pass.
std::vector<double> suffix_masses(const TopOneMarginals& marginals);

// Marginals for any reranker family at hypothesis count n.
TopOneMarginals top1_marginals(const RerankerSpec& spec, long long n);

}  // namespace rrlaws
