#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rrlaws {

struct CurvePoint {
  long long n = 0;
  double failure_rate = 0.0;
  std::uint64_t trials = 0;  // 0 for analytic curves
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  // Natural-log failure rate; survives linear underflow on analytic curves.
  std::optional<double> log_failure_rate;
};

struct FailureCurve {
  std::vector<CurvePoint> points;
};

// n strictly increasing, rates in [0,1], ci_low <= rate <= ci_high when present.
void validate_curve(const FailureCurve& curve);

// Wilson score interval; successes may be fractional (averaged outcomes).
std::pair<double, double> wilson_interval(double successes, double trials, double ci_level);

// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

// CSV with header n,failure_rate,trials,ci_low,ci_high,log10_failure_rate.
// Absent intervals serialize as empty cells.
std::string curve_to_csv(const FailureCurve& curve);
FailureCurve curve_from_csv(const std::string& text);

void write_curve_csv(const FailureCurve& curve, const std::string& path);
FailureCurve read_curve_csv(const std::string& path);

}  // namespace rrlaws
