#include "rrlaws/error_laws.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrlaws/special.hpp"

namespace rrlaws {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("epsilon must be in [0, 1]");
}

void check_beta_params(double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
}

// Streaming log-sum-exp; exponent sums accumulate in extended precision.
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == -kInf) return;
    if (log_term <= max_) {
      acc_ += std::exp(log_term - max_);
    } else {
      acc_ = acc_ * std::exp(max_ - log_term) + 1.0L;
      max_ = log_term;
    }
  }
  double log_total() const {
    if (acc_ == 0.0L) return -kInf;
    return max_ + static_cast<double>(std::log(acc_));
  }

 private:
  double max_ = -kInf;
  long double acc_ = 0.0L;
};

}  // namespace

void validate_generator(const GeneratorSpec& spec) {
  std::visit(
      [](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, IndependentGenerator>) {
          check_epsilon(g.epsilon);
        } else {
          check_beta_params(g.alpha, g.beta);
        }
      },
      spec);
}

LogProb LogProb::from_log(double log_value) {
  if (std::isnan(log_value) || log_value > 1e-12)
    throw std::invalid_argument("LogProb: log value must be <= 0");
  const double lg = std::min(log_value, 0.0);
  return LogProb(lg, std::exp(lg));
}

LogProb LogProb::from_linear(double p) {
  if (!(p >= 0.0 && p <= 1.0 + 1e-12)) throw std::invalid_argument("LogProb: p must be in [0, 1]");
  const double clamped = std::min(p, 1.0);
  return LogProb(std::log(clamped), clamped);
}

LogProb p_err_perfect_indep(double epsilon, long long n) {
  check_epsilon(epsilon);
  if (n < 1) throw std::invalid_argument("p_err_perfect_indep: requires n >= 1");
  if (epsilon == 0.0) return LogProb::from_log(-kInf);
  return LogProb::from_log(static_cast<double>(n) * std::log(epsilon));
}

LogProb p_err_random(double epsilon) {
  check_epsilon(epsilon);
  return LogProb::from_linear(epsilon);
}

LogProb p_err_generic_indep(double epsilon, const TopOneMarginals& marginals) {
  check_epsilon(epsilon);
  const long long n = static_cast<long long>(marginals.size());
  if (epsilon == 0.0) return LogProb::from_linear(0.0);
  if (epsilon == 1.0) return LogProb::from_linear(1.0);
  const std::vector<double> masses = suffix_masses(marginals);
  LogSumExp lse;
  for (long long k = 0; k <= n; ++k) {
    const double s = masses[static_cast<std::size_t>(k)];
    if (s <= 0.0) continue;
    lse.add(binomial_log_pmf(n, k, epsilon) + std::log(s));
  }
  return LogProb::from_log(lse.log_total());
}

LogProb p_err_mallows_indep(double epsilon, double lambda, long long n) {
  check_epsilon(epsilon);
  if (n < 1) throw std::invalid_argument("p_err_mallows_indep: requires n >= 1");
  if (std::isnan(lambda) || lambda < 0.0)
    throw std::invalid_argument("p_err_mallows_indep: lambda must be >= 0");
  if (lambda == 0.0) return LogProb::from_linear(epsilon);
  if (epsilon == 0.0) return LogProb::from_linear(0.0);
  if (epsilon == 1.0) return LogProb::from_linear(1.0);
  const double c = std::exp(-lambda);
  const double a = c * (1.0 - epsilon) + epsilon;
  const double nd = static_cast<double>(n);
  // log of (A^n - c^n) / (1 - c^n), with c^n = e^{-lambda n} and c/A < 1
  const double log_ratio = -lambda - std::log(a);
  const double lg = nd * std::log(a) + log1mexp(nd * log_ratio) - log1mexp(-lambda * nd);
  return LogProb::from_log(lg);
}

double mallows_rate(double epsilon, double lambda) {
  check_epsilon(epsilon);
  if (std::isnan(lambda) || lambda < 0.0) throw std::invalid_argument("mallows_rate: lambda must be >= 0");
  return std::exp(-lambda) * (1.0 - epsilon) + epsilon;
}

LogProb polynomial_r1_closed_form(double epsilon, long long n) {
  check_epsilon(epsilon);
  if (n < 1) throw std::invalid_argument("polynomial_r1_closed_form: requires n >= 1");
  const double nd = static_cast<double>(n);
  const double p = (epsilon * (1.0 - epsilon) + nd * epsilon * epsilon + epsilon) / (nd + 1.0);
  return LogProb::from_linear(p);
}

double polynomial_asymptote(double epsilon, int r) {
  check_epsilon(epsilon);
  if (r < 1) throw std::invalid_argument("polynomial_asymptote: requires r >= 1");
  return std::pow(epsilon, r + 1);
}

LogProb p_err_perfect_beta(double alpha, double beta, long long n) {
  check_beta_params(alpha, beta);
  if (n < 1) throw std::invalid_argument("p_err_perfect_beta: requires n >= 1");
  long double lg = 0.0L;
  for (long long i = 1; i <= n; ++i) {
    lg += std::log((alpha + static_cast<double>(i) - 1.0) /
                   (alpha + beta + static_cast<double>(i) - 1.0));
  }
  return LogProb::from_log(static_cast<double>(lg));
}

double beta_binomial_pmf(double alpha, double beta, long long n, long long k) {
  check_beta_params(alpha, beta);
  if (n < 0 || k < 0 || k > n) throw std::invalid_argument("beta_binomial_pmf: k out of range");
  long double lg = 0.0L;
  for (long long i = 1; i <= k; ++i) {
    // log C(n,k) folded in as log((n-k+i)/i)
    lg += std::log((static_cast<double>(n - k + i)) / static_cast<double>(i));
    lg += std::log(alpha + static_cast<double>(i) - 1.0);
  }
  for (long long i = 1; i <= n - k; ++i) lg += std::log(beta + static_cast<double>(i) - 1.0);
  for (long long i = 1; i <= n; ++i) lg -= std::log(alpha + beta + static_cast<double>(i) - 1.0);
  return static_cast<double>(std::exp(lg));
}

LogProb p_err_generic_beta(double alpha, double beta, const TopOneMarginals& marginals) {
  check_beta_params(alpha, beta);
  const long long n = static_cast<long long>(marginals.size());
  const std::vector<double> masses = suffix_masses(marginals);
  // One sweep over K with the log-pmf updated incrementally:
  //   pmf(K+1)/pmf(K) = (n-K)/(K+1) * (alpha+K)/(beta+n-K-1)
  long double lg = 0.0L;
  for (long long i = 1; i <= n; ++i) {
    lg += std::log((beta + static_cast<double>(i) - 1.0) /
                   (alpha + beta + static_cast<double>(i) - 1.0));
  }
  LogSumExp lse;
  for (long long k = 0; k <= n; ++k) {
    const double s = masses[static_cast<std::size_t>(k)];
    if (s > 0.0) lse.add(static_cast<double>(lg) + std::log(s));
    if (k < n) {
      lg += std::log(static_cast<double>(n - k) / static_cast<double>(k + 1));
      lg += std::log((alpha + static_cast<double>(k)) / (beta + static_cast<double>(n - k) - 1.0));
    }
  }
  return LogProb::from_log(lse.log_total());
}

std::pair<double, double> gautschi_bounds(double alpha, double beta, long long n) {
  check_beta_params(alpha, beta);
  if (!(beta < 1.0)) throw std::invalid_argument("gautschi_bounds: stated only for beta in (0, 1)");
  if (n < 1) throw std::invalid_argument("gautschi_bounds: requires n >= 1");
  const double log_c = log_gamma(alpha + beta) - log_gamma(alpha);
  const double nd = static_cast<double>(n);
  const double low = std::exp(log_c - beta * std::log(alpha + beta + nd));
  const double high = std::exp(log_c - beta * std::log(alpha + beta + nd - 1.0));
  return {low, high};
}

double beta_from_mean(double epsilon, double alpha) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("beta_from_mean: epsilon must be in (0, 1)");
  if (!(alpha > 0.0)) throw std::invalid_argument("beta_from_mean: alpha must be positive");
  return (1.0 / epsilon - 1.0) * alpha;
}

}  // namespace rrlaws
