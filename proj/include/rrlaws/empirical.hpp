#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrlaws/curve.hpp"

namespace rrlaws {

struct HypothesisRecord {
  std::string query_id;
  long long hyp_index = 0;  // generation order, contiguous from 0 per query
  std::optional<bool> acceptable;
  std::optional<double> rerank_score;
  std::optional<double> oracle_score;
  std::optional<std::string> exec_result;
};

enum class UtilityMode { kUtility, kLoss };

struct UtilityMatrix {
  std::string query_id;
  UtilityMode mode = UtilityMode::kUtility;
  std::vector<std::vector<double>> values;  // values[i][j]: candidate i judged against j
};

struct Query {
  std::string query_id;
  std::vector<HypothesisRecord> hyps;  // sorted by hyp_index
};

class EmpiricalDataset {
 public:
  EmpiricalDataset() = default;
  EmpiricalDataset(std::vector<Query> queries, std::map<std::string, UtilityMatrix> utilities,
                   std::optional<double> threshold);

  const std::vector<Query>& queries() const { return queries_; }
  const UtilityMatrix* utilities_for(const std::string& query_id) const;
  std::optional<double> threshold() const { return threshold_; }

  // Resolved acceptability: explicit flag, else oracle_score >= threshold.
  bool record_acceptable(const HypothesisRecord& rec) const;

 private:
  std::vector<Query> queries_;
  std::map<std::string, UtilityMatrix> utilities_;
  std::optional<double> threshold_;
};

EmpiricalDataset load_dataset(const std::string& records_path,
                              const std::optional<std::string>& utilities_path = std::nullopt,
                              std::optional<double> threshold = std::nullopt);

void save_dataset(const EmpiricalDataset& dataset, const std::string& records_path,
                  const std::optional<std::string>& utilities_path = std::nullopt);

// --- selection strategies; all return a position within the given prefix ---

// Modal exec_result among executed records; ties go to the class whose
// earliest member has the lowest hyp_index. nullopt when nothing executed.
std::optional<long long> select_majority_vote(std::span<const HypothesisRecord> prefix);

// score(i) = sum_{j != i} values[i][j] over the prefix block; argmax for
// utility mode, argmin for loss mode, ties to the smallest index.
long long select_mbr(const UtilityMatrix& matrix, long long prefix_n, bool include_self = false);

// argmax of rerank_score, ties to the lowest hyp_index.
long long select_by_score(std::span<const HypothesisRecord> prefix);

// argmax of oracle_score; with flags only, the first acceptable record
// (or 0 when none exists, which the caller counts as a failure).
long long select_oracle(std::span<const HypothesisRecord> prefix);

enum class Strategy { kOracle, kMajority, kMbr, kScore };

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);

struct Subsampling {
  enum class Kind { kPrefix, kBootstrap } kind = Kind::kPrefix;
  int bootstrap_b = 0;
  std::uint64_t seed = 0;
};

struct EmpiricalCurveOptions {
  Strategy strategy = Strategy::kOracle;
  std::vector<long long> n_grid;
  Subsampling subsampling;
  bool mbr_include_self = false;
  double ci_level = 0.99;
};

struct EmpiricalCurveResult {
  FailureCurve curve;
  std::vector<long long> dropped_per_n;  // queries too short for each grid point
  std::string strategy;
  std::string subsampling;  // "prefix" or "bootstrap:<B>"
  std::uint64_t seed = 0;
};

EmpiricalCurveResult empirical_failure_curve(const EmpiricalDataset& dataset,
                                             const EmpiricalCurveOptions& options);

}  // namespace rrlaws
