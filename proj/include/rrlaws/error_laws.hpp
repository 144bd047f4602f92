#pragma once

#include <utility>
#include <variant>

#include "rrlaws/rank_models.hpp"

namespace rrlaws {

// ---------------------------------------------------------------------------
// Hypothesis error models. Independent: every hypothesis fails with fixed
// probability epsilon. BetaCoupled: a per-query corruption probability
// tau ~ Beta(alpha, beta) is shared by all hypotheses of that query.
// ---------------------------------------------------------------------------

struct IndependentGenerator {
  double epsilon = 0.3;  // in [0, 1]
};
struct BetaCoupledGenerator {
  double alpha = 1.0;  // > 0
  double beta = 1.0;   // > 0
};

using GeneratorSpec = std::variant<IndependentGenerator, BetaCoupledGenerator>;

void validate_generator(const GeneratorSpec& spec);

// A probability held in natural-log form; curves span hundreds of decades.
// The linear value is kept alongside so exact inputs stay exact.
class LogProb {
 public:
  static LogProb from_log(double log_value);
  static LogProb from_linear(double p);

  double log() const { return log_; }
  double value() const { return linear_; }

 private:
  LogProb(double lg, double linear) : log_(lg), linear_(linear) {}
  double log_;
  double linear_;
};

// Failure probabilities for N hypotheses. "indep" laws take the per-hypothesis
// error rate epsilon, "beta" laws the Beta(alpha, beta) coupling parameters.

// epsilon^n
LogProb p_err_perfect_indep(double epsilon, long long n);

// epsilon, independent of n
LogProb p_err_random(double epsilon);

// sum_K C(n,K) eps^K (1-eps)^{n-K} * suffix_mass(marginals, K)
LogProb p_err_generic_indep(double epsilon, const TopOneMarginals& marginals);

// Closed form for Mallows marginals:
// epsilon at lambda = 0, else ([e^-l (1-eps) + eps]^n - e^-ln) / (1 - e^-ln).
LogProb p_err_mallows_indep(double epsilon, double lambda, long long n);

// Per-step decay A = e^-lambda (1-eps) + eps of the Mallows law.
double mallows_rate(double epsilon, double lambda);

// (eps(1-eps) + n eps^2 + eps) / (n+1): the r = 1 polynomial-reranker law.
LogProb polynomial_r1_closed_form(double epsilon, long long n);

// epsilon^{r+1}: the n -> inf limit of the polynomial-reranker law.
double polynomial_asymptote(double epsilon, int r);

// prod_{i=1..n} (alpha+i-1)/(alpha+beta+i-1)
LogProb p_err_perfect_beta(double alpha, double beta, long long n);

// P(K = k) for K ~ BetaBinomial(n, alpha, beta), via running log-products.
double beta_binomial_pmf(double alpha, double beta, long long n, long long k);

// sum_K BetaBinomial(n,K) * suffix_mass(marginals, K)
LogProb p_err_generic_beta(double alpha, double beta, const TopOneMarginals& marginals);

// Two-sided power-law bracket on p_err_perfect_beta, valid for beta in (0,1):
// (G/Gamma(alpha)) * (alpha+beta+n)^-beta < P < same at n-1, G = Gamma(alpha+beta).
std::pair<double, double> gautschi_bounds(double alpha, double beta, long long n);

// beta = (1/epsilon - 1) * alpha, so the Beta mean equals epsilon.
double beta_from_mean(double epsilon, double alpha);

}  // namespace rrlaws
