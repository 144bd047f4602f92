#pragma once

#include <cstdint>

namespace rrlaws {

// Natural log of the Gamma function for x > 0.
// Lanczos approximation (g = 7, 9 terms) with a reflection branch below 0.5.
double log_gamma(double x);

// stirlerr(x) = log(x!) - log(sqrt(2*pi*x) * (x/e)^x), the Stirling remainder.
double stirling_error(double x);

// Deviance term x*log(x/m) + m - x, evaluated with a series when x ~ m.
double binomial_deviance(double x, double m);

// log P(K = k) for K ~ Binomial(n, p), via the saddle-point expansion.
// Accurate to a few ulp in log space, including deep tails.
double binomial_log_pmf(long long n, long long k, double p);

// log(1 - e^x) for x <= 0.
double log1mexp(double x);

// Inverse standard normal CDF (Wichura's PPND16).
double normal_quantile(double p);

}  // namespace rrlaws
