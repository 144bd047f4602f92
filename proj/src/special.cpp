#include "rrlaws/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rrlaws {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;  // log(sqrt(2*pi))
constexpr double kInf = std::numeric_limits<double>::infinity();

// Godfrey's coefficients for g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr double kLanczosCoef[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

double lanczos_log_gamma(double x) {
  // valid for x >= 0.5
  const double z = x - 1.0;
  double a = kLanczosCoef[0];
  for (int i = 1; i < 9; ++i) a += kLanczosCoef[i] / (z + i);
  const double t = z + kLanczosG + 0.5;
  return kLogSqrt2Pi + (z + 0.5) * std::log(t) - t + std::log(a);
}

// log(k!) from exact factorials, k <= 15.
constexpr double kFactorial[16] = {
    1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0, 362880.0,
    3628800.0, 39916800.0, 479001600.0, 6227020800.0, 87178291200.0,
    1307674368000.0};

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("log_gamma: requires x > 0");
  if (x < 0.5) {
    return std::log(kPi / std::sin(kPi * x)) - lanczos_log_gamma(1.0 - x);
  }
  return lanczos_log_gamma(x);
}

double stirling_error(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("stirling_error: requires x > 0");
  if (x >= 16.0) {
    // asymptotic series; next omitted term < 1e-17 at x = 16
    const double x2 = x * x;
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * x2)) / x2) / x2) / x2) / x;
  }
  double lf;
  if (x == std::floor(x) && x <= 15.0) {
    lf = std::log(kFactorial[static_cast<int>(x)]);
  } else {
    lf = log_gamma(x + 1.0);
  }
  return lf - (x + 0.5) * std::log(x) + x - kLogSqrt2Pi;
}

double binomial_deviance(double x, double m) {
  if (std::abs(x - m) < 0.1 * (x + m)) {
    const double v = (x - m) / (x + m);
    double s = (x - m) * v;
    double ej = 2.0 * x * v;
    const double v2 = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const double s1 = s + ej / (2.0 * j + 1.0);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

double binomial_log_pmf(long long n, long long k, double p) {
  if (n < 0 || k < 0 || k > n) throw std::invalid_argument("binomial_log_pmf: k out of range");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_log_pmf: p out of range");
  if (p == 0.0) return k == 0 ? 0.0 : -kInf;
  if (p == 1.0) return k == n ? 0.0 : -kInf;
  if (k == 0) return static_cast<double>(n) * std::log1p(-p);
  if (k == n) return static_cast<double>(n) * std::log(p);
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double nk = static_cast<double>(n - k);
  const double lc = stirling_error(nd) - stirling_error(kd) - stirling_error(nk) -
                    binomial_deviance(kd, nd * p) - binomial_deviance(nk, nd * (1.0 - p));
  return lc + 0.5 * std::log(nd / (2.0 * kPi * kd * nk));
}

double log1mexp(double x) {
  if (x > 0.0) throw std::invalid_argument("log1mexp: requires x <= 0");
  if (x == 0.0) return -kInf;
  if (x > -std::numbers::ln2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

double normal_quantile(double p) {
  // Wichura (1988), algorithm AS 241, PPND16.
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: requires p in (0,1)");
  static constexpr double a[8] = {
      3.3871328727963666080e0,  1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4,  4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4,  2.5090809287301226727e3};
  static constexpr double b[8] = {
      1.0,                      4.2313330701600911252e1, 6.8718700749205790830e2,
      5.3941960214247511077e3,  2.1213794301586595867e4, 3.9307895800092710610e4,
      2.8729085735721942674e4,  5.2264952788528545610e3};
  static constexpr double c[8] = {
      1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[8] = {
      1.0,                      2.05319162663775882187e0, 1.67638483018380384940e0,
      6.89767334985100004550e-1, 1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double e[8] = {
      6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[8] = {
      1.0,                      5.99832206555887937690e-1, 1.36929880922735805310e-1,
      1.48753612908506148525e-2, 7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};
  auto horner = [](const double (&coef)[8], double r) {
    double v = coef[7];
    for (int i = 6; i >= 0; --i) v = v * r + coef[i];
    return v;
  };
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, r) / horner(b, r);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = horner(c, r) / horner(d, r);
  } else {
    r -= 5.0;
    v = horner(e, r) / horner(f, r);
  }
  return q < 0.0 ? -v : v;
}

}  // namespace rrlaws
