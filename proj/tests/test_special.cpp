#include <doctest.h>

#include <initializer_list>
#include <stdexcept>

#include <cmath>
#include <limits>

#include "rrlaws/special.hpp"

using namespace rrlaws;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("log_gamma matches high-precision references") {
  // reference values computed with 60-digit arithmetic
  const struct {
    double x, expected;
  } cases[] = {
      {0.5, 0.5723649429247000870717137},
      {1.5, -0.1207822376352452223455184},
      {3.7, 1.428072326665387921872381},
      {12.3, 18.23898340709224194192982},
      {0.001, 6.907178885383853682512345},
      {1e-8, 18.42068073818020890537531},
      {0.25, 1.28802252469807745737061},
      {170.25, 702.720661677680464975062},
      {5000.75, 37589.0141918292250332521},
      {9999.5, 82095.11236375763922815748},
      {10000.0, 82099.71749644237727264896},
  };
  for (const auto& c : cases) {
    const double got = log_gamma(c.x);
    CHECK(std::abs(got - c.expected) <= 1e-12 * std::max(1.0, std::abs(c.expected)));
  }
  CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_THROWS_AS(log_gamma(0.0), std::invalid_argument);
  CHECK_THROWS_AS(log_gamma(-1.5), std::invalid_argument);
}

TEST_CASE("log_gamma recurrence holds across the domain") {
  // lgamma(x+1) = lgamma(x) + log(x)
  for (double x : {0.01, 0.3, 0.9, 1.7, 2.5, 8.0, 31.4, 250.0, 4000.0}) {
    const double lhs = log_gamma(x + 1.0);
    const double rhs = log_gamma(x) + std::log(x);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("stirling_error agrees with its definition") {
  for (double x : {1.0, 2.0, 5.0, 15.0, 16.0, 100.0, 10000.0}) {
    const double direct = log_gamma(x + 1.0) - ((x + 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * M_PI));
    CHECK(stirling_error(x) == doctest::Approx(direct).epsilon(1e-9));
  }
  // exact small value: stirlerr(1) = 1 - log(sqrt(2 pi))
  CHECK(stirling_error(1.0) == doctest::Approx(0.0810614667953272582).epsilon(1e-13));
}

TEST_CASE("binomial_log_pmf matches high-precision references") {
  CHECK(binomial_log_pmf(7, 3, 0.3) == doctest::Approx(-1.483270127243323813813).epsilon(1e-13));
  CHECK(binomial_log_pmf(50, 17, 0.34) == doctest::Approx(-2.133547410003156027039).epsilon(1e-13));
  CHECK(binomial_log_pmf(300, 30, 0.1) == doctest::Approx(-2.569665505295875989874).epsilon(1e-13));
  CHECK(binomial_log_pmf(300, 299, 0.7) == doctest::Approx(-102.1459985673507162281).epsilon(1e-13));
  CHECK(binomial_log_pmf(10000, 8000, 0.8) == doctest::Approx(-4.607861737318259174866).epsilon(1e-13));
  CHECK(binomial_log_pmf(10000, 7900, 0.8) == doctest::Approx(-7.712930897641421617738).epsilon(1e-13));
}

TEST_CASE("binomial_log_pmf edge cases") {
  CHECK(binomial_log_pmf(5, 0, 0.0) == 0.0);
  CHECK(binomial_log_pmf(5, 3, 0.0) == -kInf);
  CHECK(binomial_log_pmf(5, 5, 1.0) == 0.0);
  CHECK(binomial_log_pmf(4, 0, 0.3) == doctest::Approx(4.0 * std::log(0.7)).epsilon(1e-15));
  CHECK(binomial_log_pmf(4, 4, 0.3) == doctest::Approx(4.0 * std::log(0.3)).epsilon(1e-15));
  CHECK_THROWS_AS(binomial_log_pmf(4, 5, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(binomial_log_pmf(4, -1, 0.3), std::invalid_argument);
}

TEST_CASE("binomial pmf sums to one") {
  for (long long n : {1LL, 2LL, 17LL, 400LL}) {
    for (double p : {0.02, 0.3, 0.97}) {
      long double sum = 0.0L;
      for (long long k = 0; k <= n; ++k) sum += std::exp((long double)binomial_log_pmf(n, k, p));
      CHECK(std::abs(static_cast<double>(sum) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("log1mexp") {
  CHECK(log1mexp(-kInf) == 0.0);
  CHECK(log1mexp(0.0) == -kInf);
  CHECK(log1mexp(-1e-15) == doctest::Approx(std::log(1e-15)).epsilon(1e-10));
  CHECK(log1mexp(-40.0) == doctest::Approx(-std::exp(-40.0)).epsilon(1e-10));
  CHECK_THROWS_AS(log1mexp(0.5), std::invalid_argument);
}

TEST_CASE("normal_quantile matches references") {
  CHECK(normal_quantile(0.995) == doctest::Approx(2.575829303548900760979).epsilon(1e-13));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054235525).epsilon(1e-13));
  CHECK(normal_quantile(0.9995) == doctest::Approx(3.290526731491894793222).epsilon(1e-13));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.005) == doctest::Approx(-2.575829303548900760979).epsilon(1e-13));
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}
