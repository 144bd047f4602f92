#pragma once

#include <span>
#include <string>

#include "rrlaws/curve.hpp"
#include "rrlaws/error_laws.hpp"
#include "rrlaws/fit.hpp"
#include "rrlaws/rank_models.hpp"

namespace rrlaws {

// Failure probability of a (generator, reranker) pair at hypothesis count n.
// Routes to the closed forms where they exist, otherwise to the generic sums.
LogProb law_value(const GeneratorSpec& generator, const RerankerSpec& reranker, long long n);

// Analytic curve over a grid; points carry linear and log values, trials = 0.
FailureCurve evaluate_law(const GeneratorSpec& generator, const RerankerSpec& reranker,
                          std::span<const long long> n_grid);

struct LawQuery {
  GeneratorSpec generator;
  RerankerSpec reranker;
  double target = 0.01;    // in (0, 1)
  long long n_cap = 100000;
};

// Fitted-law convenience: BetaCoupled(alpha, beta) with a Zipf-Mandelbrot
// reranker, or the perfect reranker when e_neg_lambda = 0.
GeneratorSpec generator_from_params(const LawParams& params);
RerankerSpec reranker_from_params(const LawParams& params);

struct MinNResult {
  bool reachable = false;
  long long n = 0;          // meaningful when reachable
  double p_err_at_n = 1.0;  // value at n, or at n_cap when unreachable
  long long n_cap = 0;
};

// Smallest n <= n_cap with P_err(n) <= target: exponential expansion, then
// binary search. Monotonicity is verified on the probed points; a linear
// scan takes over if a violation shows up.
MinNResult min_n_for_target(const LawQuery& query);

std::string min_n_result_to_json(const MinNResult& result);

}  // namespace rrlaws
