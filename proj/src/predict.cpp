#include "rrlaws/predict.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace rrlaws {

LogProb law_value(const GeneratorSpec& generator, const RerankerSpec& reranker, long long n) {
  if (n < 1) throw std::invalid_argument("law_value: requires n >= 1");
  validate_generator(generator);
  validate_reranker(reranker);
  if (const auto* indep = std::get_if<IndependentGenerator>(&generator)) {
    const double eps = indep->epsilon;
    if (std::holds_alternative<PerfectReranker>(reranker)) return p_err_perfect_indep(eps, n);
    if (std::holds_alternative<RandomReranker>(reranker)) return p_err_random(eps);
    if (const auto* m = std::get_if<MallowsReranker>(&reranker))
      return p_err_mallows_indep(eps, m->lambda, n);
    return p_err_generic_indep(eps, top1_marginals(reranker, n));
  }
  const auto& coupled = std::get<BetaCoupledGenerator>(generator);
  if (std::holds_alternative<PerfectReranker>(reranker))
    return p_err_perfect_beta(coupled.alpha, coupled.beta, n);
  if (std::holds_alternative<RandomReranker>(reranker))
    return LogProb::from_linear(coupled.alpha / (coupled.alpha + coupled.beta));
  return p_err_generic_beta(coupled.alpha, coupled.beta, top1_marginals(reranker, n));
}

FailureCurve evaluate_law(const GeneratorSpec& generator, const RerankerSpec& reranker,
                          std::span<const long long> n_grid) {
  FailureCurve curve;
  for (long long n : n_grid) {
    const LogProb p = law_value(generator, reranker, n);
    CurvePoint pt;
    pt.n = n;
    pt.failure_rate = p.value();
    pt.trials = 0;
    pt.log_failure_rate = p.log();
    curve.points.push_back(pt);
  }
  validate_curve(curve);
  return curve;
}

GeneratorSpec generator_from_params(const LawParams& params) {
  validate_law_params(params);
  return BetaCoupledGenerator{params.alpha, params.beta};
}

RerankerSpec reranker_from_params(const LawParams& params) {
  validate_law_params(params);
  if (params.e_neg_lambda == 0.0) return PerfectReranker{};
  return ZipfMandelbrotReranker{-std::log(params.e_neg_lambda), params.gamma};
}

MinNResult min_n_for_target(const LawQuery& query) {
  if (!(query.target > 0.0 && query.target < 1.0))
    throw std::invalid_argument("min_n_for_target: target must be in (0, 1)");
  if (query.n_cap < 1) throw std::invalid_argument("min_n_for_target: n_cap must be >= 1");

  std::map<long long, double> probes;
  auto value_at = [&](long long n) {
    const auto it = probes.find(n);
    if (it != probes.end()) return it->second;
    const double v = law_value(query.generator, query.reranker, n).value();
    probes.emplace(n, v);
    return v;
  };

  MinNResult result;
  result.n_cap = query.n_cap;

  // exponential expansion until the target is met or the cap is hit
  long long hit = -1;
  long long probe = 1;
  for (;;) {
    const double v = value_at(probe);
    if (v <= query.target) {
      hit = probe;
      break;
    }
    if (probe >= query.n_cap) break;
    probe = std::min(query.n_cap, probe * 2);
  }
  if (hit < 0) {
    result.reachable = false;
    result.p_err_at_n = value_at(query.n_cap);
    return result;
  }

  long long lo = hit / 2;  // value_at(lo) > target when lo >= 1
  long long hi = hit;
  if (lo < 1) lo = 0;
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    if (value_at(mid) <= query.target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  // the law must be non-increasing on every probed point
  bool monotone = true;
  double prev = 2.0;
  for (const auto& [n, v] : probes) {
    if (v > prev * (1.0 + 1e-12)) {
      monotone = false;
      break;
    }
    prev = v;
  }
  if (monotone && hi > 1 && value_at(hi - 1) <= query.target) monotone = false;

  if (!monotone) {
    for (long long n = 1; n <= query.n_cap; ++n) {
      if (value_at(n) <= query.target) {
        result.reachable = true;
        result.n = n;
        result.p_err_at_n = value_at(n);
        return result;
      }
    }
    result.reachable = false;
    result.p_err_at_n = value_at(query.n_cap);
    return result;
  }

  result.reachable = true;
  result.n = hi;
  result.p_err_at_n = value_at(hi);
  return result;
}

std::string min_n_result_to_json(const MinNResult& result) {
  nlohmann::json j;
  j["reachable"] = result.reachable;
  if (result.reachable) {
    j["n"] = result.n;
  } else {
    j["n"] = nullptr;
  }
  j["p_err_at_n"] = result.p_err_at_n;
  j["n_cap"] = result.n_cap;
  return j.dump(2) + "\n";
}

}  // namespace rrlaws
