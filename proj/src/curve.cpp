#include "rrlaws/curve.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rrlaws/special.hpp"

namespace rrlaws {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_double(const std::string& s, int line_no) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error("curve csv: bad number '" + s + "' at line " + std::to_string(line_no));
  return v;
}

}  // namespace

void validate_curve(const FailureCurve& curve) {
  long long prev_n = 0;
  for (const auto& pt : curve.points) {
    if (pt.n < 1) throw std::invalid_argument("curve: n must be >= 1");
    if (pt.n <= prev_n) throw std::invalid_argument("curve: n must be strictly increasing");
    prev_n = pt.n;
    if (!(pt.failure_rate >= 0.0 && pt.failure_rate <= 1.0))
      throw std::invalid_argument("curve: failure_rate out of [0, 1]");
    if (pt.ci_low.has_value() != pt.ci_high.has_value())
      throw std::invalid_argument("curve: half-specified interval");
    if (pt.ci_low) {
      if (!(*pt.ci_low >= 0.0 && *pt.ci_low <= pt.failure_rate &&
            pt.failure_rate <= *pt.ci_high && *pt.ci_high <= 1.0))
        throw std::invalid_argument("curve: interval must bracket the rate in [0, 1]");
    }
  }
}

std::pair<double, double> wilson_interval(double successes, double trials, double ci_level) {
  if (!(trials > 0.0)) throw std::invalid_argument("wilson_interval: trials must be positive");
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw std::invalid_argument("wilson_interval: ci_level must be in (0, 1)");
  const double z = normal_quantile(0.5 + ci_level / 2.0);
  const double p_hat = successes / trials;
  const double z2n = z * z / trials;
  const double denom = 1.0 + z2n;
  const double center = (p_hat + z2n / 2.0) / denom;
  const double half = z * std::sqrt(p_hat * (1.0 - p_hat) / trials + z2n / (4.0 * trials)) / denom;
  // the interval always brackets the point estimate, exactly at the edges
  const double lo = p_hat == 0.0 ? 0.0 : std::clamp(center - half, 0.0, p_hat);
  const double hi = p_hat == 1.0 ? 1.0 : std::clamp(center + half, p_hat, 1.0);
  return {lo, hi};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string curve_to_csv(const FailureCurve& curve) {
  std::string out = "n,failure_rate,trials,ci_low,ci_high,log10_failure_rate\n";
  for (const auto& pt : curve.points) {
    out += std::to_string(pt.n);
    out += ',';
    out += format_double(pt.failure_rate);
    out += ',';
    out += std::to_string(pt.trials);
    out += ',';
    if (pt.ci_low) out += format_double(*pt.ci_low);
    out += ',';
    if (pt.ci_high) out += format_double(*pt.ci_high);
    out += ',';
    const double lg = pt.log_failure_rate
                          ? *pt.log_failure_rate
                          : (pt.failure_rate > 0.0 ? std::log(pt.failure_rate) : -kInf);
    out += format_double(lg / std::numbers::ln10);
    out += '\n';
  }
  return out;
}

FailureCurve curve_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int col_n = -1, col_rate = -1, col_trials = -1, col_lo = -1, col_hi = -1, col_log10 = -1;
  FailureCurve curve;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    if (col_n < 0) {
      for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
        if (cells[i] == "n") col_n = i;
        else if (cells[i] == "failure_rate") col_rate = i;
        else if (cells[i] == "trials") col_trials = i;
        else if (cells[i] == "ci_low") col_lo = i;
        else if (cells[i] == "ci_high") col_hi = i;
        else if (cells[i] == "log10_failure_rate") col_log10 = i;
      }
      if (col_n < 0 || col_rate < 0)
        throw std::runtime_error("curve csv: header must name columns n and failure_rate");
      continue;
    }
    CurvePoint pt;
    auto cell = [&](int idx) -> std::string {
      return idx >= 0 && idx < static_cast<int>(cells.size()) ? cells[idx] : std::string{};
    };
    pt.n = static_cast<long long>(parse_double(cell(col_n), line_no));
    pt.failure_rate = parse_double(cell(col_rate), line_no);
    if (!cell(col_trials).empty())
      pt.trials = static_cast<std::uint64_t>(parse_double(cell(col_trials), line_no));
    if (!cell(col_lo).empty()) pt.ci_low = parse_double(cell(col_lo), line_no);
    if (!cell(col_hi).empty()) pt.ci_high = parse_double(cell(col_hi), line_no);
    if (!cell(col_log10).empty()) {
      const double l10 = parse_double(cell(col_log10), line_no);
      if (l10 != -kInf) pt.log_failure_rate = l10 * std::numbers::ln10;
    }
    curve.points.push_back(pt);
  }
  validate_curve(curve);
  return curve;
}

void write_curve_csv(const FailureCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << curve_to_csv(curve);
  if (!out) throw std::runtime_error("write failed: " + path);
}

FailureCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return curve_from_csv(ss.str());
}

}  // namespace rrlaws
