#include <doctest.h>

#include <initializer_list>
#include <stdexcept>
#include <vector>

#include <cmath>
#include <limits>

#include "rrlaws/error_laws.hpp"

using namespace rrlaws;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("p_err_perfect_indep") {
  CHECK(p_err_perfect_indep(0.3, 1).value() == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(p_err_perfect_indep(0.0, 7).value() == 0.0);
  CHECK(p_err_perfect_indep(1.0, 7).value() == 1.0);
  CHECK(p_err_perfect_indep(0.3, 3).value() == doctest::Approx(0.027).epsilon(1e-14));
  CHECK_THROWS_AS(p_err_perfect_indep(1.2, 3), std::invalid_argument);
}

TEST_CASE("p_err_random") {
  CHECK(p_err_random(0.3).value() == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(p_err_random(0.0).value() == 0.0);
  CHECK(p_err_random(1.0).value() == 1.0);
}

TEST_CASE("p_err_generic_indep hand cases") {
  CHECK(p_err_generic_indep(0.3, TopOneMarginals({1.0, 0.0})).value() ==
        doctest::Approx(0.09).epsilon(1e-13));
  CHECK(p_err_generic_indep(0.3, TopOneMarginals(std::vector<double>(5, 0.2))).value() ==
        doctest::Approx(0.3).epsilon(1e-12));
  CHECK(p_err_generic_indep(0.3, mallows_top1_marginals(std::log(2.0), 2)).value() ==
        doctest::Approx(0.23).epsilon(1e-13));
  CHECK(p_err_generic_indep(0.0, mallows_top1_marginals(1.0, 5)).value() == 0.0);
  CHECK(p_err_generic_indep(1.0, mallows_top1_marginals(1.0, 5)).value() == 1.0);
}

TEST_CASE("uniform marginals reduce the generic law to epsilon") {
  for (long long n : {2LL, 9LL, 40LL}) {
    for (double eps : {0.05, 0.3, 0.92}) {
      const TopOneMarginals uniform(std::vector<double>(n, 1.0 / static_cast<double>(n)));
      CHECK(p_err_generic_indep(eps, uniform).value() == doctest::Approx(eps).epsilon(1e-11));
    }
  }
}

TEST_CASE("p_err_mallows_indep closed form") {
  CHECK(p_err_mallows_indep(0.3, 0.0, 50).value() == 0.3);  // exact at lambda = 0
  CHECK(p_err_mallows_indep(0.3, -std::log(0.5), 2).value() == doctest::Approx(0.23).epsilon(1e-13));
  // e^-lambda = 1e-12 behaves as the perfect reranker
  const double tiny = -std::log(1e-12);
  CHECK(p_err_mallows_indep(0.3, tiny, 4).value() == doctest::Approx(0.0081).epsilon(1e-9));
  // frozen reference at n = 17
  CHECK(p_err_mallows_indep(0.3, -std::log(0.5), 17).log() ==
        doctest::Approx(-7.334929419794199539497).epsilon(1e-13));
  CHECK(p_err_mallows_indep(0.0, 1.0, 9).value() == 0.0);
  CHECK(p_err_mallows_indep(1.0, 1.0, 9).value() == 1.0);
}

TEST_CASE("closed form vs generic sum with Mallows marginals") {
  for (double eps : {0.1, 0.3, 0.7}) {
    for (double enl : {0.1, 0.5, 0.9}) {
      const double lambda = -std::log(enl);
      for (long long n : {1LL, 2LL, 3LL, 7LL, 20LL, 77LL, 300LL}) {
        const double closed = p_err_mallows_indep(eps, lambda, n).log();
        const double generic = p_err_generic_indep(eps, mallows_top1_marginals(lambda, n)).log();
        CHECK(std::abs(closed - generic) <= 1e-9 * std::max(1.0, std::abs(closed)));
      }
    }
  }
}

TEST_CASE("mallows law is sandwiched between the perfect and random laws") {
  for (double eps : {0.1, 0.3, 0.7}) {
    for (double enl : {0.1, 0.5, 0.9}) {
      const double lambda = -std::log(enl);
      for (long long n : {1LL, 4LL, 32LL, 128LL}) {
        const double v = p_err_mallows_indep(eps, lambda, n).value();
        CHECK(v <= eps * (1.0 + 1e-12));
        CHECK(v >= std::pow(eps, static_cast<double>(n)) * (1.0 - 1e-12));
      }
    }
  }
}

TEST_CASE("mallows_rate") {
  CHECK(mallows_rate(0.3, -std::log(0.5)) == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(mallows_rate(0.3, kInf) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(mallows_rate(0.3, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // A >= eps, A = 1 iff lambda = 0 or eps = 1
  for (double eps : {0.0, 0.2, 0.9}) {
    for (double lambda : {0.01, 1.0, 40.0}) {
      CHECK(mallows_rate(eps, lambda) >= eps);
      CHECK(mallows_rate(eps, lambda) < 1.0);
    }
  }
  CHECK(mallows_rate(1.0, 3.0) == 1.0);
}

TEST_CASE("asymptotic slope of the mallows law") {
  const double lambda = -std::log(0.5);
  const double slope = p_err_mallows_indep(0.3, lambda, 201).log() - p_err_mallows_indep(0.3, lambda, 200).log();
  CHECK(std::abs(slope - std::log(0.65)) <= 1e-6);
}

TEST_CASE("polynomial closed form and asymptote") {
  CHECK(polynomial_r1_closed_form(0.0, 10).value() == 0.0);
  CHECK(polynomial_r1_closed_form(0.8, 1).value() == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(polynomial_r1_closed_form(0.8, 10000).value() == doctest::Approx(0.64).epsilon(2e-3));
  CHECK(polynomial_asymptote(0.8, 1) == doctest::Approx(0.64).epsilon(1e-14));
  CHECK(polynomial_asymptote(0.8, 3) == doctest::Approx(0.4096).epsilon(1e-14));
  CHECK(polynomial_asymptote(0.0, 5) == 0.0);

  // generic law with r = 1 marginals equals the closed form
  for (long long n : {1LL, 2LL, 10LL, 100LL, 2000LL}) {
    const double generic = p_err_generic_indep(0.8, polynomial_top1_marginals(1, n)).value();
    CHECK(std::abs(generic - polynomial_r1_closed_form(0.8, n).value()) <= 1e-12);
  }
}

TEST_CASE("generic law with polynomial marginals approaches the asymptote") {
  for (int r : {1, 2, 3}) {
    const double v = p_err_generic_indep(0.8, polynomial_top1_marginals(r, 10000)).value();
    CHECK(std::abs(v - polynomial_asymptote(0.8, r)) <= 1e-3);
  }
}

TEST_CASE("p_err_perfect_beta") {
  CHECK(p_err_perfect_beta(1.0, 1.0, 3).value() == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p_err_perfect_beta(2.0, 3.0, 1).value() == doctest::Approx(0.4).epsilon(1e-14));
  // frozen extended-precision product
  CHECK(p_err_perfect_beta(0.1, 0.46, 50).value() ==
        doctest::Approx(0.02765901810028719385169).epsilon(1e-12));
  const auto bounds = gautschi_bounds(0.1, 0.46, 50);
  CHECK(p_err_perfect_beta(0.1, 0.46, 50).value() > bounds.first);
  CHECK(p_err_perfect_beta(0.1, 0.46, 50).value() < bounds.second);
  // strictly decreasing in n
  double prev = 1.0;
  for (long long n = 1; n <= 64; ++n) {
    const double v = p_err_perfect_beta(0.7, 1.3, n).value();
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(p_err_perfect_beta(0.0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("beta_binomial_pmf") {
  for (long long k = 0; k <= 5; ++k) {
    CHECK(beta_binomial_pmf(1.0, 1.0, 5, k) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
  }
  CHECK(beta_binomial_pmf(0.7, 0.7, 2, 0) == doctest::Approx(beta_binomial_pmf(0.7, 0.7, 2, 2)).epsilon(1e-14));
  CHECK(beta_binomial_pmf(2.0, 3.0, 1, 1) == doctest::Approx(0.4).epsilon(1e-14));
  // frozen references
  CHECK(beta_binomial_pmf(0.1, 0.46, 50, 17) == doctest::Approx(0.005709847737100700866001).epsilon(1e-12));
  CHECK(beta_binomial_pmf(0.1, 0.46, 50, 0) == doctest::Approx(0.5580043428017178272247).epsilon(1e-12));
  CHECK(beta_binomial_pmf(2.0, 3.0, 10, 4) == doctest::Approx(0.1398601398601398601399).epsilon(1e-13));
  CHECK_THROWS_AS(beta_binomial_pmf(1.0, 1.0, 5, 6), std::invalid_argument);
  CHECK_THROWS_AS(beta_binomial_pmf(1.0, 1.0, 5, -1), std::invalid_argument);

  for (long long n : {1LL, 13LL, 200LL, 2000LL}) {
    long double sum = 0.0L;
    for (long long k = 0; k <= n; ++k) sum += beta_binomial_pmf(0.1, 0.46, n, k);
    CHECK(std::abs(static_cast<double>(sum) - 1.0) <= 1e-10);
  }
}

TEST_CASE("p_err_generic_beta") {
  CHECK(p_err_generic_beta(1.0, 1.0, TopOneMarginals({1.0, 0.0, 0.0})).value() ==
        doctest::Approx(0.25).epsilon(1e-13));
  CHECK(p_err_generic_beta(2.0, 3.0, TopOneMarginals(std::vector<double>(7, 1.0 / 7.0))).value() ==
        doctest::Approx(0.4).epsilon(1e-10));
  // perfect marginals reduce to the telescoping product
  for (long long n : {1LL, 5LL, 40LL, 333LL}) {
    std::vector<double> delta(n, 0.0);
    delta[0] = 1.0;
    const double generic = p_err_generic_beta(0.1, 0.46, TopOneMarginals(delta)).log();
    const double product = p_err_perfect_beta(0.1, 0.46, n).log();
    CHECK(std::abs(generic - product) <= 1e-10 * std::max(1.0, std::abs(product)));
  }
  // huge alpha reverts to full independence
  const double alpha = 1e4;
  const double beta = (1.0 / 0.3 - 1.0) * alpha;
  const double coupled = p_err_generic_beta(alpha, beta, mallows_top1_marginals(std::log(2.0), 2)).value();
  CHECK(std::abs(coupled - 0.23) <= 1e-3);
}

TEST_CASE("gautschi_bounds") {
  const auto b = gautschi_bounds(0.5, 0.5, 10);
  CHECK(b.first == doctest::Approx(0.1701095599322525039123).epsilon(1e-12));
  CHECK(b.second == doctest::Approx(0.1784124116152771114539).epsilon(1e-12));
  // exact product prod (i - 0.5)/i sits strictly inside
  CHECK(p_err_perfect_beta(0.5, 0.5, 10).value() == doctest::Approx(0.176197052001953125).epsilon(1e-13));
  CHECK(p_err_perfect_beta(0.5, 0.5, 10).value() > b.first);
  CHECK(p_err_perfect_beta(0.5, 0.5, 10).value() < b.second);

  const auto n1 = gautschi_bounds(0.1, 0.46, 1);
  CHECK(n1.first < 0.1 / 0.56);
  CHECK(n1.second > 0.1 / 0.56);

  for (double alpha : {0.2, 0.8, 3.0}) {
    for (double beta : {0.1, 0.5, 0.95}) {
      for (long long n : {1LL, 7LL, 100LL}) {
        const auto lohi = gautschi_bounds(alpha, beta, n);
        CHECK(lohi.first < lohi.second);
      }
    }
  }
  CHECK_THROWS_AS(gautschi_bounds(0.5, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(gautschi_bounds(0.5, 1.5, 10), std::invalid_argument);
}

TEST_CASE("bounds hold across a grid") {
  for (double alpha : {0.1, 0.5, 0.9}) {
    for (double beta : {0.1, 0.5, 0.9}) {
      long double lg = 0.0L;
      for (long long n = 1; n <= 2000; ++n) {
        lg += std::log((alpha + n - 1.0) / (alpha + beta + n - 1.0));
        const double value = std::exp(static_cast<double>(lg));
        const auto lohi = gautschi_bounds(alpha, beta, n);
        CHECK(value > lohi.first);
        CHECK(value < lohi.second);
      }
    }
  }
}

TEST_CASE("beta_from_mean") {
  CHECK(beta_from_mean(0.5, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(beta_from_mean(0.3, 0.3) == doctest::Approx(0.7).epsilon(1e-14));
  for (double t : {1e-3, 1.0, 57.0}) {
    const double alpha = 0.3 * t;
    const double beta = beta_from_mean(0.3, alpha);
    CHECK(alpha / (alpha + beta) == doctest::Approx(0.3).epsilon(1e-12));
  }
  CHECK_THROWS_AS(beta_from_mean(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(beta_from_mean(1.0, 1.0), std::invalid_argument);
}

TEST_CASE("laws are non-increasing in n") {
  for (double eps : {0.1, 0.3, 0.7}) {
    double prev_m = 1.1, prev_g = 1.1;
    for (long long n = 1; n <= 120; ++n) {
      const double m = p_err_mallows_indep(eps, 0.7, n).value();
      CHECK(m <= prev_m * (1.0 + 1e-12));
      prev_m = m;
      const double g = p_err_generic_indep(eps, zipf_mandelbrot_top1_marginals(0.7, 0.5, n)).value();
      CHECK(g <= prev_g * (1.0 + 1e-12));
      prev_g = g;
    }
  }
  double prev = 1.1;
  for (long long n = 1; n <= 120; ++n) {
    const double v = p_err_generic_beta(0.4, 0.8, zipf_mandelbrot_top1_marginals(1.0, 0.5, n)).value();
    CHECK(v <= prev * (1.0 + 1e-12));
    prev = v;
  }
  for (int r : {1, 2, 3}) {
    double prev_p = 1.1;
    for (long long n = 1; n <= 120; ++n) {
      const double v = p_err_generic_indep(0.8, polynomial_top1_marginals(r, n)).value();
      CHECK(v <= prev_p * (1.0 + 1e-12));
      prev_p = v;
    }
  }
}

TEST_CASE("LogProb") {
  CHECK(LogProb::from_linear(0.0).log() == -kInf);
  CHECK(LogProb::from_linear(1.0).log() == 0.0);
  CHECK(LogProb::from_log(-2.0).value() == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(LogProb::from_log(5e-13).log() == 0.0);  // slack clamps to a genuine probability
  CHECK_THROWS_AS(LogProb::from_log(0.5), std::invalid_argument);
  CHECK_THROWS_AS(LogProb::from_linear(1.5), std::invalid_argument);
}

TEST_CASE("generic law stays accurate deep in the tail") {
  // perfect marginals: the sum collapses to the K = n term, eps^n
  std::vector<double> delta(280, 0.0);
  delta[0] = 1.0;
  const double lg = p_err_generic_indep(0.1, TopOneMarginals(delta)).log();
  CHECK(std::abs(lg - 280.0 * std::log(0.1)) <= 1e-9 * std::abs(lg));
}
