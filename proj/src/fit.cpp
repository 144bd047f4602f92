#include "rrlaws/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "rrlaws/error_laws.hpp"
#include "rrlaws/rank_models.hpp"

namespace rrlaws {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxIterations = 500;
constexpr double kStepTol = 1e-10;
constexpr double kResidualDecreaseTol = 1e-12;

// Smooth box reparameterization: x = lo + (hi - lo) * sigmoid(u).
double to_x(double u, double lo, double hi) {
  const double s = 1.0 / (1.0 + std::exp(-u));
  return lo + (hi - lo) * s;
}

double to_u(double x, double lo, double hi) {
  double s = (x - lo) / (hi - lo);
  s = std::clamp(s, 1e-12, 1.0 - 1e-12);
  return std::log(s / (1.0 - s));
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Gaussian elimination with partial pivoting; a is m x m row-major.
bool solve_linear(std::vector<double> a, std::vector<double> b, std::vector<double>& out) {
  const std::size_t m = b.size();
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r) {
      if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
    }
    if (std::abs(a[piv * m + col]) < 1e-300) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < m; ++c) std::swap(a[col * m + c], a[piv * m + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < m; ++r) {
      const double f = a[r * m + col] / a[col * m + col];
      for (std::size_t c = col; c < m; ++c) a[r * m + c] -= f * a[col * m + c];
      b[r] -= f * b[col];
    }
  }
  out.assign(m, 0.0);
  for (std::size_t r = m; r-- > 0;) {
    double s = b[r];
    for (std::size_t c = r + 1; c < m; ++c) s -= a[r * m + c] * out[c];
    out[r] = s / a[r * m + r];
  }
  return true;
}

}  // namespace

void validate_law_params(const LawParams& p) {
  if (!(p.alpha > 0.0)) throw std::invalid_argument("law params: alpha must be positive");
  if (!(p.beta > 0.0)) throw std::invalid_argument("law params: beta must be positive");
  if (!(p.gamma > 0.0 && p.gamma <= 1.0)) throw std::invalid_argument("law params: gamma must be in (0, 1]");
  if (!(p.e_neg_lambda >= 0.0 && p.e_neg_lambda < 1.0))
    throw std::invalid_argument("law params: e_neg_lambda must be in [0, 1)");
}

LeastSquaresResult least_squares(const ResidualFn& residual_fn, std::span<const double> initial,
                                 std::span<const double> lower, std::span<const double> upper) {
  const std::size_t m = initial.size();
  if (lower.size() != m || upper.size() != m)
    throw std::invalid_argument("least_squares: bounds size mismatch");
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw std::invalid_argument("least_squares: bounds must be finite");
    if (!(lower[i] < upper[i])) throw std::invalid_argument("least_squares: requires lower < upper");
    if (!(initial[i] >= lower[i] && initial[i] <= upper[i]))
      throw std::invalid_argument("least_squares: initial point out of bounds");
  }

  std::vector<double> u(m);
  for (std::size_t i = 0; i < m; ++i) u[i] = to_u(initial[i], lower[i], upper[i]);

  auto x_of = [&](const std::vector<double>& uu) {
    std::vector<double> x(m);
    for (std::size_t i = 0; i < m; ++i) x[i] = to_x(uu[i], lower[i], upper[i]);
    return x;
  };
  auto eval = [&](const std::vector<double>& uu) { return residual_fn(x_of(uu)); };

  std::vector<double> r = eval(u);
  for (double v : r) {
    if (!std::isfinite(v)) throw FitError("least_squares: residuals not finite at the initial point");
  }
  double f = norm2(r);
  const std::size_t n_res = r.size();

  double mu = -1.0;  // initialized from the first JtJ diagonal
  bool converged = false;
  int iter = 0;
  for (; iter < kMaxIterations; ++iter) {
    // forward-difference Jacobian in u-space
    std::vector<double> jac(n_res * m);
    bool jac_ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      const double h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(u[i]));
      std::vector<double> up = u;
      up[i] += h;
      const std::vector<double> rp = eval(up);
      for (std::size_t k = 0; k < n_res; ++k) {
        const double d = (rp[k] - r[k]) / h;
        if (!std::isfinite(d)) jac_ok = false;
        jac[k * m + i] = d;
      }
    }
    if (!jac_ok) break;

    std::vector<double> jtj(m * m, 0.0), jtr(m, 0.0);
    for (std::size_t k = 0; k < n_res; ++k) {
      for (std::size_t i = 0; i < m; ++i) {
        jtr[i] += jac[k * m + i] * r[k];
        for (std::size_t j = 0; j <= i; ++j) jtj[i * m + j] += jac[k * m + i] * jac[k * m + j];
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) jtj[i * m + j] = jtj[j * m + i];
    }
    if (mu < 0.0) {
      double dmax = 0.0;
      for (std::size_t i = 0; i < m; ++i) dmax = std::max(dmax, jtj[i * m + i]);
      mu = dmax > 0.0 ? 1e-3 * dmax : 1e-3;
    }

    bool stepped = false;
    for (int damp = 0; damp < 60; ++damp) {
      std::vector<double> a = jtj;
      for (std::size_t i = 0; i < m; ++i) a[i * m + i] += mu * (1.0 + jtj[i * m + i]);
      std::vector<double> rhs(m), delta;
      for (std::size_t i = 0; i < m; ++i) rhs[i] = -jtr[i];
      if (!solve_linear(std::move(a), std::move(rhs), delta)) {
        mu *= 4.0;
        continue;
      }
      std::vector<double> u_new(m);
      for (std::size_t i = 0; i < m; ++i) u_new[i] = u[i] + delta[i];
      const std::vector<double> r_new = eval(u_new);
      double f_new = 0.0;
      bool finite = true;
      for (double v : r_new) {
        if (!std::isfinite(v)) {
          finite = false;
          break;
        }
        f_new += v * v;
      }
      if (finite && f_new <= f) {
        const std::vector<double> x_old = x_of(u);
        const std::vector<double> x_new = x_of(u_new);
        double step = 0.0;
        for (std::size_t i = 0; i < m; ++i) step += (x_new[i] - x_old[i]) * (x_new[i] - x_old[i]);
        const double decrease = f - f_new;
        u = u_new;
        r = r_new;
        f = f_new;
        mu = std::max(mu * 0.3, 1e-14);
        stepped = true;
        if (std::sqrt(step) < kStepTol || decrease < kResidualDecreaseTol * std::max(f, 1e-300)) {
          converged = true;
        }
        break;
      }
      mu *= 4.0;
      if (mu > 1e14) break;
    }
    if (!stepped || converged) {
      if (!stepped) converged = true;  // no improving step exists at damping limit
      ++iter;
      break;
    }
  }

  LeastSquaresResult result;
  result.solution = x_of(u);
  result.residual_norm = std::sqrt(f);
  result.converged = converged;
  result.iterations = iter;
  return result;
}

std::vector<LogPoint> usable_log_points(const FailureCurve& curve, int* dropped) {
  std::vector<LogPoint> points;
  int skipped = 0;
  for (const auto& pt : curve.points) {
    double lg;
    if (pt.failure_rate > 0.0) {
      lg = std::log(pt.failure_rate);
    } else if (pt.log_failure_rate && std::isfinite(*pt.log_failure_rate)) {
      lg = *pt.log_failure_rate;
    } else {
      ++skipped;
      continue;
    }
    points.push_back({pt.n, lg, pt.trials});
  }
  if (dropped) *dropped = skipped;
  return points;
}

ResidualFn make_stage1_residuals(std::vector<LogPoint> points, FitOptions options) {
  return [points = std::move(points), options](std::span<const double> x) {
    const double alpha = x[0];
    const double beta = x[1];
    std::vector<double> r(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double w = options.weight_sqrt_trials
                           ? std::sqrt(static_cast<double>(std::max<std::uint64_t>(points[i].trials, 1)))
                           : 1.0;
      r[i] = w * (p_err_perfect_beta(alpha, beta, points[i].n).log() - points[i].log_rate);
    }
    return r;
  };
}

ResidualFn make_stage2_residuals(std::vector<LogPoint> points, double alpha, double beta,
                                 FitOptions options) {
  return [points = std::move(points), alpha, beta, options](std::span<const double> x) {
    const double gamma = x[0];
    const double e_neg_lambda = x[1];
    const double lambda = -std::log(e_neg_lambda);
    std::vector<double> r(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto marginals = zipf_mandelbrot_top1_marginals(lambda, gamma, points[i].n);
      const double w = options.weight_sqrt_trials
                           ? std::sqrt(static_cast<double>(std::max<std::uint64_t>(points[i].trials, 1)))
                           : 1.0;
      r[i] = w * (p_err_generic_beta(alpha, beta, marginals).log() - points[i].log_rate);
    }
    return r;
  };
}

namespace {

struct MultistartOutcome {
  LeastSquaresResult best;
  int best_index = -1;
  std::vector<MultistartEntry> starts;
};

MultistartOutcome run_multistart(const ResidualFn& fn, const std::vector<std::array<double, 2>>& grid,
                                 std::span<const double> lower, std::span<const double> upper) {
  MultistartOutcome out;
  double best_res = kInf;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    MultistartEntry entry;
    try {
      const std::array<double, 2>& s = grid[g];
      const LeastSquaresResult res = least_squares(fn, s, lower, upper);
      entry.params = res.solution;
      entry.residual_norm = res.residual_norm;
      entry.converged = res.converged;
      entry.iterations = res.iterations;
      if (res.residual_norm < best_res) {
        best_res = res.residual_norm;
        out.best = res;
        out.best_index = static_cast<int>(g);
      }
    } catch (const FitError&) {
      entry.failed = true;
    }
    out.starts.push_back(std::move(entry));
  }
  if (out.best_index < 0) throw FitError("fit: every multistart failed");
  return out;
}

void flag_boundaries(StageDiagnostics& diag, std::span<const double> solution,
                     std::span<const double> lower, std::span<const double> upper,
                     std::span<const char* const> names) {
  for (std::size_t i = 0; i < solution.size(); ++i) {
    const double width = upper[i] - lower[i];
    if (solution[i] - lower[i] <= 1e-4 * width)
      diag.boundary_hits.push_back(std::string(names[i]) + "@lower");
    else if (upper[i] - solution[i] <= 1e-4 * width)
      diag.boundary_hits.push_back(std::string(names[i]) + "@upper");
  }
}

}  // namespace

Stage1Fit fit_stage1(const FailureCurve& oracle_curve, FitOptions options) {
  int dropped = 0;
  std::vector<LogPoint> points = usable_log_points(oracle_curve, &dropped);
  if (points.size() < 2)
    throw FitError("fit_stage1: underdetermined, fewer than 2 points with nonzero failure rate");

  const ResidualFn fn = make_stage1_residuals(points, options);
  std::vector<std::array<double, 2>> grid;
  for (double a : {0.05, 0.1, 0.5, 1.0}) {
    for (double b : {0.1, 0.3, 0.5, 1.0}) grid.push_back({a, b});
  }
  const double lower[2] = {1e-4, 1e-4};
  const double upper[2] = {1e2, 1e2};
  MultistartOutcome out = run_multistart(fn, grid, lower, upper);

  Stage1Fit fit;
  fit.alpha = out.best.solution[0];
  fit.beta = out.best.solution[1];
  fit.diagnostics.run = true;
  fit.diagnostics.residual_norm = out.best.residual_norm;
  fit.diagnostics.iterations = out.best.iterations;
  fit.diagnostics.converged = out.best.converged;
  fit.diagnostics.n_points_used = static_cast<int>(points.size());
  fit.diagnostics.n_points_dropped = dropped;
  fit.diagnostics.multistart_best_index = out.best_index;
  fit.diagnostics.starts = std::move(out.starts);
  const char* names[2] = {"alpha", "beta"};
  flag_boundaries(fit.diagnostics, out.best.solution, lower, upper, names);
  return fit;
}

Stage2Fit fit_stage2(const FailureCurve& imperfect_curve, double alpha, double beta,
                     FitOptions options) {
  if (!(alpha > 0.0 && beta > 0.0)) throw std::invalid_argument("fit_stage2: invalid (alpha, beta)");
  int dropped = 0;
  std::vector<LogPoint> points = usable_log_points(imperfect_curve, &dropped);
  if (points.size() < 2)
    throw FitError("fit_stage2: underdetermined, fewer than 2 points with nonzero failure rate");

  const ResidualFn fn = make_stage2_residuals(points, alpha, beta, options);
  std::vector<std::array<double, 2>> grid;
  for (double g : {0.01, 0.2, 0.5, 0.99}) {
    for (double e : {0.001, 0.01, 0.1, 0.5}) grid.push_back({g, e});
  }
  const double lower[2] = {1e-3, 1e-6};
  const double upper[2] = {1.0, 1.0 - 1e-6};
  MultistartOutcome out = run_multistart(fn, grid, lower, upper);

  Stage2Fit fit;
  fit.gamma = out.best.solution[0];
  fit.e_neg_lambda = out.best.solution[1];
  fit.diagnostics.run = true;
  fit.diagnostics.residual_norm = out.best.residual_norm;
  fit.diagnostics.iterations = out.best.iterations;
  fit.diagnostics.converged = out.best.converged;
  fit.diagnostics.n_points_used = static_cast<int>(points.size());
  fit.diagnostics.n_points_dropped = dropped;
  fit.diagnostics.multistart_best_index = out.best_index;
  fit.diagnostics.starts = std::move(out.starts);
  const char* names[2] = {"gamma", "e_neg_lambda"};
  flag_boundaries(fit.diagnostics, out.best.solution, lower, upper, names);
  return fit;
}

FitReport fit_law(const FailureCurve& oracle_curve,
                  const std::optional<FailureCurve>& imperfect_curve, FitOptions options) {
  FitReport report;
  Stage1Fit s1 = fit_stage1(oracle_curve, options);
  report.params.alpha = s1.alpha;
  report.params.beta = s1.beta;
  report.stage1 = std::move(s1.diagnostics);
  report.multistart_best_index = report.stage1.multistart_best_index;
  if (imperfect_curve) {
    Stage2Fit s2 = fit_stage2(*imperfect_curve, report.params.alpha, report.params.beta, options);
    report.params.gamma = s2.gamma;
    report.params.e_neg_lambda = s2.e_neg_lambda;
    report.stage2 = std::move(s2.diagnostics);
    report.multistart_best_index = report.stage2.multistart_best_index;
  } else {
    report.params.gamma = 1.0;
    report.params.e_neg_lambda = 0.0;
    report.stage2.run = false;
  }
  return report;
}

namespace {

nlohmann::json stage_to_json(const StageDiagnostics& d) {
  nlohmann::json j;
  j["run"] = d.run;
  j["residual_norm"] = d.residual_norm;
  j["iterations"] = d.iterations;
  j["converged"] = d.converged;
  j["n_points_used"] = d.n_points_used;
  j["n_points_dropped"] = d.n_points_dropped;
  j["multistart_best_index"] = d.multistart_best_index;
  j["boundary_hits"] = d.boundary_hits;
  return j;
}

}  // namespace

std::string fit_report_to_json(const FitReport& report) {
  nlohmann::json j;
  j["alpha"] = report.params.alpha;
  j["beta"] = report.params.beta;
  j["gamma"] = report.params.gamma;
  j["e_neg_lambda"] = report.params.e_neg_lambda;
  j["stage1"] = stage_to_json(report.stage1);
  j["stage2"] = stage_to_json(report.stage2);
  j["multistart_best_index"] = report.multistart_best_index;
  return j.dump(2) + "\n";
}

LawParams law_params_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  LawParams p;
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.e_neg_lambda = j.at("e_neg_lambda").get<double>();
  validate_law_params(p);
  return p;
}

}  // namespace rrlaws
