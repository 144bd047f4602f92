#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrlaws/curve.hpp"

namespace rrlaws {

// The four fitted parameters of a reranking law: Beta(alpha, beta) coupling
// plus a Zipf-Mandelbrot reranker (gamma, e^-lambda). e_neg_lambda = 0 encodes
// the perfect reranker.
struct LawParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double e_neg_lambda = 0.0;
};

void validate_law_params(const LawParams& params);

struct MultistartEntry {
  std::vector<double> params;
  double residual_norm = 0.0;
  bool converged = false;
  int iterations = 0;
  bool failed = false;
};

struct StageDiagnostics {
  bool run = false;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  int n_points_used = 0;
  int n_points_dropped = 0;
  int multistart_best_index = -1;
  std::vector<std::string> boundary_hits;
  std::vector<MultistartEntry> starts;  // every multistart outcome, grid order
};

struct FitReport {
  LawParams params;
  StageDiagnostics stage1;
  StageDiagnostics stage2;
  int multistart_best_index = -1;  // winning stage-2 start (stage 1 when not run)
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;

struct LeastSquaresResult {
  std::vector<double> solution;
  double residual_norm = 0.0;  // Euclidean norm of the residual vector
  bool converged = false;
  int iterations = 0;
};

// Levenberg-Marquardt with forward-difference Jacobians. Box constraints are
// enforced by a smooth reparameterization (logit over finite intervals, log
// for one-sided bounds). Throws FitError when the initial residuals are not
// finite.
LeastSquaresResult least_squares(const ResidualFn& residual_fn, std::span<const double> initial,
                                 std::span<const double> lower, std::span<const double> upper);

// Log points usable for fitting: finite log failure rate. Zero-rate points
// are dropped and counted, never clamped.
struct LogPoint {
  long long n = 0;
  double log_rate = 0.0;
  std::uint64_t trials = 0;
};
std::vector<LogPoint> usable_log_points(const FailureCurve& curve, int* dropped = nullptr);

struct FitOptions {
  bool weight_sqrt_trials = false;
};

// residual_i = log P_perfect_beta(alpha, beta; n_i) - log f_i
ResidualFn make_stage1_residuals(std::vector<LogPoint> points, FitOptions options = {});

// residual_i = log P(alpha, beta, zipf(gamma, lambda) marginals; n_i) - log f_i,
// parameters x = (gamma, e_neg_lambda) with alpha, beta frozen
ResidualFn make_stage2_residuals(std::vector<LogPoint> points, double alpha, double beta,
                                 FitOptions options = {});

struct Stage1Fit {
  double alpha = 0.0;
  double beta = 0.0;
  StageDiagnostics diagnostics;
};
Stage1Fit fit_stage1(const FailureCurve& oracle_curve, FitOptions options = {});

struct Stage2Fit {
  double gamma = 0.0;
  double e_neg_lambda = 0.0;
  StageDiagnostics diagnostics;
};
Stage2Fit fit_stage2(const FailureCurve& imperfect_curve, double alpha, double beta,
                     FitOptions options = {});

// Stage 1 on the perfect-reranker curve, then stage 2 with (alpha, beta)
// frozen. Stage 2 is marked not-run when no imperfect curve is given.
FitReport fit_law(const FailureCurve& oracle_curve,
                  const std::optional<FailureCurve>& imperfect_curve, FitOptions options = {});

std::string fit_report_to_json(const FitReport& report);
LawParams law_params_from_json(const std::string& text);

}  // namespace rrlaws
