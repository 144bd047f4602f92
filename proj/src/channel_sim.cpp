#include "rrlaws/channel_sim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace rrlaws {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2));
  return splitmix64(s);
}

}  // namespace

SubstreamRng::SubstreamRng(std::uint64_t seed, std::uint64_t key_a, std::uint64_t key_b)
    : state_(mix(mix(seed, key_a), key_b)) {}

std::uint64_t SubstreamRng::next_u64() { return splitmix64(state_); }

double SubstreamRng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SubstreamRng::next_normal() {
  // Box-Muller; u1 shifted into (0, 1]
  const double u1 = 1.0 - next_unit();
  const double u2 = next_unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double SubstreamRng::next_gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("next_gamma: shape must be positive");
  if (shape < 1.0) {
    const double u = 1.0 - next_unit();
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - next_unit();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double SubstreamRng::next_beta(double alpha, double beta) {
  const double x = next_gamma(alpha);
  const double y = next_gamma(beta);
  return x / (x + y);
}

long long SubstreamRng::next_binomial(long long n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("next_binomial: bad arguments");
  long long k = 0;
  for (long long i = 0; i < n; ++i) {
    if (next_unit() < p) ++k;
  }
  return k;
}

Top1Sampler::Top1Sampler(const TopOneMarginals& marginals) {
  const auto& eta = marginals.values();
  const std::size_t n = eta.size();
  suffix_.assign(n + 1, 0.0);
  long double acc = 0.0L;
  for (std::size_t k = n; k-- > 0;) {
    acc += eta[k];
    suffix_[k] = static_cast<double>(acc);
  }
  suffix_[0] = 1.0;  // exact head; rank 1 is max{j : suffix_[j-1] > u}
}

long long Top1Sampler::draw(SubstreamRng& rng) const {
  const double u = rng.next_unit();
  // largest j with suffix_[j-1] > u; suffix_ is non-increasing
  std::size_t lo = 0, hi = suffix_.size() - 1;  // suffix_[lo] > u >= suffix_[hi]
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (suffix_[mid] > u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return static_cast<long long>(lo + 1);
}

long long sample_top1_index(const TopOneMarginals& marginals, SubstreamRng& rng) {
  return Top1Sampler(marginals).draw(rng);
}

Permutation sample_mallows_permutation(double lambda, int n, SubstreamRng& rng) {
  if (n < 1) throw std::invalid_argument("sample_mallows_permutation: requires n >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("sample_mallows_permutation: lambda must be >= 0");
  const double q = std::exp(-lambda);
  std::vector<int> order;  // order[p] = item at rank p+1
  order.reserve(n);
  for (int i = 1; i <= n; ++i) {
    // weights q^{i-j} over insertion position j = 1..i; walk from the back
    double total;
    if (lambda == 0.0) {
      total = static_cast<double>(i);
    } else {
      total = q == 1.0 ? static_cast<double>(i) : (1.0 - std::pow(q, i)) / (1.0 - q);
    }
    double u = rng.next_unit() * total;
    int j = i;
    double w = 1.0;  // q^{i-j} at j = i
    while (j > 1) {
      if (u < w) break;
      u -= w;
      w *= q;
      --j;
    }
    order.insert(order.begin() + (j - 1), i);
  }
  std::vector<int> ranks(n);
  for (int p = 0; p < n; ++p) ranks[order[p] - 1] = p + 1;
  return Permutation(std::move(ranks));
}

FailureCurve simulate_curve(const SimConfig& config) {
  validate_generator(config.generator);
  validate_reranker(config.reranker);
  if (config.trials < 1) throw std::invalid_argument("simulate_curve: trials must be >= 1");
  if (config.n_grid.empty()) throw std::invalid_argument("simulate_curve: empty n grid");
  long long prev = 0;
  unsigned long long total_n = 0;
  for (long long n : config.n_grid) {
    if (n < 1 || n <= prev) throw std::invalid_argument("simulate_curve: n grid must be strictly increasing");
    prev = n;
    total_n += static_cast<unsigned long long>(n);
  }
  if (total_n * config.trials > config.draw_budget)
    throw std::invalid_argument("simulate_curve: trials * sum(n) exceeds the draw budget");
  if (!(config.ci_level > 0.0 && config.ci_level < 1.0))
    throw std::invalid_argument("simulate_curve: ci_level must be in (0, 1)");

  const bool independent = std::holds_alternative<IndependentGenerator>(config.generator);
  const double epsilon = independent ? std::get<IndependentGenerator>(config.generator).epsilon : 0.0;
  const double alpha = independent ? 0.0 : std::get<BetaCoupledGenerator>(config.generator).alpha;
  const double beta = independent ? 0.0 : std::get<BetaCoupledGenerator>(config.generator).beta;

  FailureCurve curve;
  for (long long n : config.n_grid) {
    const Top1Sampler sampler(top1_marginals(config.reranker, n));
    auto run_range = [&](std::uint64_t t0, std::uint64_t t1) -> std::uint64_t {
      std::uint64_t failures = 0;
      for (std::uint64_t t = t0; t < t1; ++t) {
        SubstreamRng rng(config.seed, static_cast<std::uint64_t>(n), t);
        const double tau = independent ? epsilon : rng.next_beta(alpha, beta);
        const long long k = rng.next_binomial(n, tau);
        const long long rank = sampler.draw(rng);
        if (rank > n - k) ++failures;
      }
      return failures;
    };

    std::uint64_t failures = 0;
    const int workers = std::max(1, config.threads);
    if (workers == 1 || config.trials < 1000) {
      failures = run_range(0, config.trials);
    } else {
      std::vector<std::uint64_t> counts(workers, 0);
      std::vector<std::thread> pool;
      const std::uint64_t chunk = (config.trials + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const std::uint64_t t0 = chunk * w;
        const std::uint64_t t1 = std::min(config.trials, t0 + chunk);
        if (t0 >= t1) break;
        pool.emplace_back([&, w, t0, t1] { counts[w] = run_range(t0, t1); });
      }
      for (auto& th : pool) th.join();
      for (std::uint64_t c : counts) failures += c;
    }

    CurvePoint pt;
    pt.n = n;
    pt.trials = config.trials;
    pt.failure_rate = static_cast<double>(failures) / static_cast<double>(config.trials);
    const auto ci = wilson_interval(static_cast<double>(failures),
                                    static_cast<double>(config.trials), config.ci_level);
    pt.ci_low = ci.first;
    pt.ci_high = ci.second;
    if (pt.failure_rate > 0.0) pt.log_failure_rate = std::log(pt.failure_rate);
    curve.points.push_back(pt);
  }
  return curve;
}

}  // namespace rrlaws
