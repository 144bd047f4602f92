#include "rrlaws/rank_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace rrlaws {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSumTol = 1e-10;

long double ipow(long double base, int exp) {
  long double v = 1.0L;
  for (int i = 0; i < exp; ++i) v *= base;
  return v;
}

std::vector<double> softmax(std::span<const double> scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  long double total = 0.0L;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - m);
    total += out[i];
  }
  for (double& v : out) v = static_cast<double>(v / total);
  return out;
}

}  // namespace

void validate_reranker(const RerankerSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MallowsReranker>) {
          if (!(s.lambda >= 0.0)) throw std::invalid_argument("mallows: lambda must be >= 0");
        } else if constexpr (std::is_same_v<T, ZipfMandelbrotReranker>) {
          if (!(s.lambda > 0.0) || std::isinf(s.lambda))
            throw std::invalid_argument("zipf: lambda must be positive and finite");
          if (!(s.gamma > 0.0 && s.gamma <= 1.0))
            throw std::invalid_argument("zipf: gamma must be in (0, 1]");
        } else if constexpr (std::is_same_v<T, PolynomialReranker>) {
          if (s.r < 1) throw std::invalid_argument("poly: r must be >= 1");
        } else if constexpr (std::is_same_v<T, ExplicitReranker>) {
          if (s.marginals.empty()) throw std::invalid_argument("explicit: marginals empty");
          long double sum = 0.0L;
          for (double v : s.marginals) {
            if (!(v >= 0.0)) throw std::invalid_argument("explicit: negative marginal entry");
            sum += v;
          }
          if (std::abs(static_cast<double>(sum) - 1.0) > kSumTol)
            throw std::invalid_argument("explicit: marginals must sum to 1");
        }
      },
      spec);
}

TopOneMarginals::TopOneMarginals(std::vector<double> eta) : eta_(std::move(eta)) {
  if (eta_.empty()) throw std::invalid_argument("marginals: empty vector");
  long double sum = 0.0L;
  for (double v : eta_) {
    if (!(v >= 0.0)) throw std::invalid_argument("marginals: negative entry");
    sum += v;
  }
  if (std::abs(static_cast<double>(sum) - 1.0) > kSumTol)
    throw std::invalid_argument("marginals: entries must sum to 1");
}

double TopOneMarginals::at_rank(std::size_t j) const {
  if (j < 1 || j > eta_.size()) throw std::invalid_argument("marginals: rank out of range");
  return eta_[j - 1];
}

Permutation::Permutation(std::vector<int> ranks) : ranks_(std::move(ranks)) {
  const int n = static_cast<int>(ranks_.size());
  if (n == 0) throw std::invalid_argument("permutation: empty");
  std::vector<bool> seen(n, false);
  for (int r : ranks_) {
    if (r < 1 || r > n || seen[r - 1]) throw std::invalid_argument("permutation: not a bijection");
    seen[r - 1] = true;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> ranks(n);
  std::iota(ranks.begin(), ranks.end(), 1);
  return Permutation(std::move(ranks));
}

Permutation Permutation::reversed(int n) {
  std::vector<int> ranks(n);
  for (int i = 0; i < n; ++i) ranks[i] = n - i;
  return Permutation(std::move(ranks));
}

int Permutation::rank_at(int position) const {
  if (position < 1 || position > size()) throw std::invalid_argument("permutation: bad position");
  return ranks_[position - 1];
}

int Permutation::position_of_rank(int rank) const {
  if (rank < 1 || rank > size()) throw std::invalid_argument("permutation: bad rank");
  for (int i = 0; i < size(); ++i) {
    if (ranks_[i] == rank) return i + 1;
  }
  return 0;  // unreachable, ranks_ is a bijection
}

int kendall_tau_distance(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size()) throw std::invalid_argument("kendall_tau_distance: length mismatch");
  const auto& ra = a.ranks();
  const auto& rb = b.ranks();
  const int n = a.size();
  int d = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((ra[i] - ra[j]) * (rb[i] - rb[j]) < 0) ++d;
    }
  }
  return d;
}

double mallows_partition(double lambda, int n) {
  if (n < 1) throw std::invalid_argument("mallows_partition: requires n >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("mallows_partition: lambda must be >= 0");
  if (lambda == 0.0) {
    double z = 1.0;
    for (int j = 2; j <= n; ++j) z *= j;
    return z;
  }
  const double denom = std::expm1(-lambda);
  double z = 1.0;
  for (int j = 1; j <= n; ++j) z *= std::expm1(-lambda * j) / denom;
  return z;
}

TopOneMarginals mallows_top1_marginals(double lambda, long long n) {
  if (n < 1) throw std::invalid_argument("mallows_top1_marginals: requires n >= 1");
  if (std::isnan(lambda) || lambda < 0.0)
    throw std::invalid_argument("mallows_top1_marginals: lambda must be >= 0");
  std::vector<double> eta(static_cast<std::size_t>(n));
  if (lambda == 0.0) {
    std::fill(eta.begin(), eta.end(), 1.0 / static_cast<double>(n));
    return TopOneMarginals(std::move(eta));
  }
  if (std::isinf(lambda)) {
    eta[0] = 1.0;
    return TopOneMarginals(std::move(eta));
  }
  // 1/S with S = (1 - e^{-lambda n}) / (1 - e^{-lambda}); never forms e^{+x}
  const double inv_s = std::expm1(-lambda) / std::expm1(-lambda * static_cast<double>(n));
  for (long long j = 0; j < n; ++j) {
    eta[static_cast<std::size_t>(j)] = std::exp(-lambda * static_cast<double>(j)) * inv_s;
  }
  return TopOneMarginals(std::move(eta));
}

BruteForceMallows brute_force_mallows(double lambda, int n) {
  if (n < 1) throw std::invalid_argument("brute_force_mallows: requires n >= 1");
  if (n > 8) throw std::invalid_argument("brute_force_mallows: n > 8 refused (n! enumeration)");
  if (!(lambda >= 0.0)) throw std::invalid_argument("brute_force_mallows: lambda must be >= 0");
  std::vector<int> ranks(n);
  std::iota(ranks.begin(), ranks.end(), 1);
  std::vector<long double> mass(n, 0.0L);
  long double total = 0.0L;
  do {
    int d = 0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (ranks[i] > ranks[j]) ++d;
      }
    }
    const long double w = std::exp(-lambda * d);
    total += w;
    for (int i = 0; i < n; ++i) {
      if (ranks[i] == 1) {
        mass[i] += w;  // top pick sits at position i; identity oracle rank is i+1
        break;
      }
    }
  } while (std::next_permutation(ranks.begin(), ranks.end()));
  std::vector<double> eta(n);
  for (int i = 0; i < n; ++i) eta[i] = static_cast<double>(mass[i] / total);
  return {TopOneMarginals(std::move(eta)), static_cast<double>(total)};
}

TopOneMarginals brute_force_mallows_marginals(double lambda, int n) {
  return brute_force_mallows(lambda, n).marginals;
}

std::vector<double> entmax(std::span<const double> scores, double gamma) {
  if (scores.empty()) throw std::invalid_argument("entmax: empty scores");
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("entmax: scores must be finite");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("entmax: gamma must be in (0, 1]");
  if (std::abs(gamma - 1.0) < 1e-6) return softmax(scores);

  const double p = 1.0 / (1.0 - gamma);
  const double zmax = *std::max_element(scores.begin(), scores.end());
  auto sum_at = [&](double tau) -> double {
    long double total = 0.0L;
    for (double z : scores) {
      const double u = 1.0 + (gamma - 1.0) * (z - tau);
      if (u <= 0.0) return kInf;
      total += std::pow(u, -p);
    }
    return static_cast<double>(total);
  };

  double lo = zmax - p;  // sum diverges here: top entry hits the clamp boundary
  double hi = zmax + 1.0;
  double step = 1.0;
  int guard = 0;
  while (sum_at(hi) >= 1.0) {
    step *= 2.0;
    hi = zmax + step;
    if (++guard > 200) throw std::runtime_error("entmax: failed to bracket threshold");
  }

  double tau = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    tau = 0.5 * (lo + hi);
    const double s = sum_at(tau);
    if (std::abs(s - 1.0) <= 1e-12) break;
    if (s > 1.0) {
      lo = tau;
    } else {
      hi = tau;
    }
  }

  std::vector<double> out(scores.size());
  long double total = 0.0L;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double u = 1.0 + (gamma - 1.0) * (scores[i] - tau);
    out[i] = u > 0.0 ? std::pow(u, -p) : 0.0;
    total += out[i];
  }
  for (double& v : out) v = static_cast<double>(v / total);
  return out;
}

TopOneMarginals zipf_mandelbrot_top1_marginals(double lambda, double gamma, long long n) {
  if (n < 1) throw std::invalid_argument("zipf_mandelbrot_top1_marginals: requires n >= 1");
  validate_reranker(ZipfMandelbrotReranker{lambda, gamma});
  if (std::abs(gamma - 1.0) < 1e-6) return mallows_top1_marginals(lambda, n);
  // For gamma < 1 the result is a shifted power law: with p = 1/(1-gamma),
  // b = lambda/p, and a = (p + tau)/lambda - 1 (tau the entmax threshold),
  // eta_j = b^-p (a+j)^-p.
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (long long j = 0; j < n; ++j) scores[static_cast<std::size_t>(j)] = -lambda * static_cast<double>(j);
  return TopOneMarginals(entmax(scores, gamma));
}

TopOneMarginals polynomial_top1_marginals(int r, long long n) {
  if (r < 1 || r > 8) throw std::invalid_argument("polynomial_top1_marginals: r must be in [1, 8]");
  if (n < 1 || n > 1000000) throw std::invalid_argument("polynomial_top1_marginals: n must be in [1, 1e6]");
  long double total = 0.0L;
  for (long long k = 1; k <= n; ++k) total += ipow(static_cast<long double>(k), r);
  std::vector<double> eta(static_cast<std::size_t>(n));
  for (long long j = 1; j <= n; ++j) {
    eta[static_cast<std::size_t>(j - 1)] =
        static_cast<double>(ipow(static_cast<long double>(n - j + 1), r) / total);
  }
  return TopOneMarginals(std::move(eta));
}

double suffix_mass(const TopOneMarginals& marginals, std::size_t k) {
  const std::size_t n = marginals.size();
  if (k > n) throw std::invalid_argument("suffix_mass: k out of range");
  long double acc = 0.0L;
  const auto& eta = marginals.values();
  for (std::size_t i = 0; i < k; ++i) acc += eta[n - 1 - i];
  return static_cast<double>(acc);
}

std::vector<double> suffix_masses(const TopOneMarginals& marginals) {
  const std::size_t n = marginals.size();
  const auto& eta = marginals.values();
  std::vector<double> masses(n + 1);
  long double acc = 0.0L;
  masses[0] = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    acc += eta[n - k];
    masses[k] = static_cast<double>(acc);
  }
  return masses;
}

TopOneMarginals top1_marginals(const RerankerSpec& spec, long long n) {
  if (n < 1) throw std::invalid_argument("top1_marginals: requires n >= 1");
  validate_reranker(spec);
  struct Builder {
    long long n;
    TopOneMarginals operator()(const PerfectReranker&) const {
      std::vector<double> eta(static_cast<std::size_t>(n), 0.0);
      eta[0] = 1.0;
      return TopOneMarginals(std::move(eta));
    }
    TopOneMarginals operator()(const RandomReranker&) const {
      return TopOneMarginals(std::vector<double>(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n)));
    }
    TopOneMarginals operator()(const MallowsReranker& s) const {
      return mallows_top1_marginals(s.lambda, n);
    }
    TopOneMarginals operator()(const ZipfMandelbrotReranker& s) const {
      return zipf_mandelbrot_top1_marginals(s.lambda, s.gamma, n);
    }
    TopOneMarginals operator()(const PolynomialReranker& s) const {
      return polynomial_top1_marginals(s.r, n);
    }
    TopOneMarginals operator()(const ExplicitReranker& s) const {
      if (static_cast<long long>(s.marginals.size()) != n)
        throw std::invalid_argument("explicit marginals defined for N=" +
                                    std::to_string(s.marginals.size()) + ", requested n=" +
                                    std::to_string(n));
      return TopOneMarginals(s.marginals);
    }
  };
  return std::visit(Builder{n}, spec);
}

}  // namespace rrlaws
