#include "rrlaws/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rrlaws/channel_sim.hpp"

namespace rrlaws {

namespace {

using nlohmann::json;

void check_square_finite(const UtilityMatrix& m) {
  const std::size_t n = m.values.size();
  for (const auto& row : m.values) {
    if (row.size() != n) throw std::runtime_error("utilities: matrix for query '" + m.query_id + "' is not square");
    for (double v : row) {
      if (!std::isfinite(v)) throw std::runtime_error("utilities: non-finite entry for query '" + m.query_id + "'");
    }
  }
}

}  // namespace

EmpiricalDataset::EmpiricalDataset(std::vector<Query> queries,
                                   std::map<std::string, UtilityMatrix> utilities,
                                   std::optional<double> threshold)
    : queries_(std::move(queries)), utilities_(std::move(utilities)), threshold_(threshold) {
  std::vector<std::string> problems;
  for (const auto& q : queries_) {
    for (std::size_t i = 0; i < q.hyps.size(); ++i) {
      if (q.hyps[i].hyp_index != static_cast<long long>(i)) {
        problems.push_back(q.query_id + ": hyp_index not contiguous from 0");
        break;
      }
    }
    for (const auto& rec : q.hyps) {
      if (!rec.acceptable && !(rec.oracle_score && threshold_)) {
        problems.push_back(q.query_id + ": record " + std::to_string(rec.hyp_index) +
                           " has neither an acceptable flag nor (oracle_score, threshold)");
        break;
      }
    }
    if (auto it = utilities_.find(q.query_id); it != utilities_.end()) {
      if (it->second.values.size() != q.hyps.size()) {
        problems.push_back(q.query_id + ": utility matrix size " +
                           std::to_string(it->second.values.size()) + " != hypothesis count " +
                           std::to_string(q.hyps.size()));
      }
    }
  }
  if (!problems.empty()) {
    std::string msg = "dataset validation failed for " + std::to_string(problems.size()) + " query(ies):";
    for (std::size_t i = 0; i < problems.size() && i < 8; ++i) msg += "\n  " + problems[i];
    if (problems.size() > 8) msg += "\n  ...";
    throw std::runtime_error(msg);
  }
}

const UtilityMatrix* EmpiricalDataset::utilities_for(const std::string& query_id) const {
  const auto it = utilities_.find(query_id);
  return it == utilities_.end() ? nullptr : &it->second;
}

bool EmpiricalDataset::record_acceptable(const HypothesisRecord& rec) const {
  if (rec.acceptable) return *rec.acceptable;
  return *rec.oracle_score >= *threshold_;  // validated at construction
}

EmpiricalDataset load_dataset(const std::string& records_path,
                              const std::optional<std::string>& utilities_path,
                              std::optional<double> threshold) {
  std::ifstream in(records_path);
  if (!in) throw std::runtime_error("cannot open: " + records_path);

  std::vector<Query> queries;
  std::map<std::string, std::size_t> index_of;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error(records_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    HypothesisRecord rec;
    try {
      rec.query_id = obj.at("query_id").get<std::string>();
      rec.hyp_index = obj.at("hyp_index").get<long long>();
      if (obj.contains("acceptable")) rec.acceptable = obj["acceptable"].get<bool>();
      if (obj.contains("rerank_score")) rec.rerank_score = obj["rerank_score"].get<double>();
      if (obj.contains("oracle_score")) rec.oracle_score = obj["oracle_score"].get<double>();
      if (obj.contains("exec_result")) rec.exec_result = obj["exec_result"].get<std::string>();
    } catch (const json::exception& e) {
      throw std::runtime_error(records_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = index_of.try_emplace(rec.query_id, queries.size());
    if (inserted) queries.push_back(Query{rec.query_id, {}});
    queries[it->second].hyps.push_back(std::move(rec));
  }
  for (auto& q : queries) {
    std::sort(q.hyps.begin(), q.hyps.end(),
              [](const HypothesisRecord& a, const HypothesisRecord& b) { return a.hyp_index < b.hyp_index; });
  }

  std::map<std::string, UtilityMatrix> utilities;
  if (utilities_path) {
    std::ifstream uin(*utilities_path);
    if (!uin) throw std::runtime_error("cannot open: " + *utilities_path);
    line_no = 0;
    while (std::getline(uin, line)) {
      ++line_no;
      if (line.empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::exception& e) {
        throw std::runtime_error(*utilities_path + ":" + std::to_string(line_no) + ": " + e.what());
      }
      UtilityMatrix m;
      try {
        m.query_id = obj.at("query_id").get<std::string>();
        const auto mode = obj.at("mode").get<std::string>();
        if (mode == "utility") {
          m.mode = UtilityMode::kUtility;
        } else if (mode == "loss") {
          m.mode = UtilityMode::kLoss;
        } else {
          throw std::runtime_error("mode must be 'utility' or 'loss'");
        }
        m.values = obj.at("values").get<std::vector<std::vector<double>>>();
      } catch (const json::exception& e) {
        throw std::runtime_error(*utilities_path + ":" + std::to_string(line_no) + ": " + e.what());
      }
      check_square_finite(m);
      utilities[m.query_id] = std::move(m);
    }
  }
  return EmpiricalDataset(std::move(queries), std::move(utilities), threshold);
}

void save_dataset(const EmpiricalDataset& dataset, const std::string& records_path,
                  const std::optional<std::string>& utilities_path) {
  std::ofstream out(records_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + records_path);
  for (const auto& q : dataset.queries()) {
    for (const auto& rec : q.hyps) {
      json obj;
      obj["query_id"] = rec.query_id;
      obj["hyp_index"] = rec.hyp_index;
      if (rec.acceptable) obj["acceptable"] = *rec.acceptable;
      if (rec.rerank_score) obj["rerank_score"] = *rec.rerank_score;
      if (rec.oracle_score) obj["oracle_score"] = *rec.oracle_score;
      if (rec.exec_result) obj["exec_result"] = *rec.exec_result;
      out << obj.dump() << '\n';
    }
  }
  if (utilities_path) {
    std::ofstream uout(*utilities_path, std::ios::binary);
    if (!uout) throw std::runtime_error("cannot open for writing: " + *utilities_path);
    for (const auto& q : dataset.queries()) {
      const UtilityMatrix* m = dataset.utilities_for(q.query_id);
      if (!m) continue;
      json obj;
      obj["query_id"] = m->query_id;
      obj["mode"] = m->mode == UtilityMode::kUtility ? "utility" : "loss";
      obj["values"] = m->values;
      uout << obj.dump() << '\n';
    }
  }
}

std::optional<long long> select_majority_vote(std::span<const HypothesisRecord> prefix) {
  if (prefix.empty()) throw std::invalid_argument("select_majority_vote: empty prefix");
  struct ClassInfo {
    long long count = 0;
    long long earliest = 0;  // lowest hyp_index in the class
  };
  std::map<std::string, ClassInfo> classes;
  for (const auto& rec : prefix) {
    if (!rec.exec_result || rec.exec_result->empty()) continue;  // failed to execute
    auto [it, inserted] = classes.try_emplace(*rec.exec_result);
    if (inserted) it->second.earliest = rec.hyp_index;
    ++it->second.count;
  }
  if (classes.empty()) return std::nullopt;
  const ClassInfo* best = nullptr;
  for (const auto& [result, info] : classes) {
    if (!best || info.count > best->count ||
        (info.count == best->count && info.earliest < best->earliest)) {
      best = &info;
    }
  }
  return best->earliest;
}

long long select_mbr(const UtilityMatrix& matrix, long long prefix_n, bool include_self) {
  const long long n = static_cast<long long>(matrix.values.size());
  if (prefix_n < 1 || prefix_n > n) throw std::invalid_argument("select_mbr: prefix out of range");
  long long best = 0;
  double best_score = 0.0;
  for (long long i = 0; i < prefix_n; ++i) {
    double score = 0.0;
    for (long long j = 0; j < prefix_n; ++j) {
      if (!include_self && j == i) continue;
      score += matrix.values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    const bool better = matrix.mode == UtilityMode::kUtility ? score > best_score : score < best_score;
    if (i == 0 || better) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

long long select_by_score(std::span<const HypothesisRecord> prefix) {
  if (prefix.empty()) throw std::invalid_argument("select_by_score: empty prefix");
  long long best = -1;
  double best_score = 0.0;
  for (const auto& rec : prefix) {
    if (!rec.rerank_score) throw std::runtime_error("select_by_score: record missing rerank_score");
    if (best < 0 || *rec.rerank_score > best_score) {
      best = rec.hyp_index;
      best_score = *rec.rerank_score;
    }
  }
  return best;
}

long long select_oracle(std::span<const HypothesisRecord> prefix) {
  if (prefix.empty()) throw std::invalid_argument("select_oracle: empty prefix");
  const bool all_scored = std::all_of(prefix.begin(), prefix.end(),
                                      [](const HypothesisRecord& r) { return r.oracle_score.has_value(); });
  if (all_scored) {
    long long best = -1;
    double best_score = 0.0;
    for (const auto& rec : prefix) {
      if (best < 0 || *rec.oracle_score > best_score) {
        best = rec.hyp_index;
        best_score = *rec.oracle_score;
      }
    }
    return best;
  }
  const bool all_flagged = std::all_of(prefix.begin(), prefix.end(),
                                       [](const HypothesisRecord& r) { return r.acceptable.has_value(); });
  if (!all_flagged)
    throw std::runtime_error("select_oracle: records need oracle_score or acceptable flags throughout");
  for (const auto& rec : prefix) {
    if (*rec.acceptable) return rec.hyp_index;
  }
  return prefix.front().hyp_index;
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "oracle") return Strategy::kOracle;
  if (name == "majority") return Strategy::kMajority;
  if (name == "mbr") return Strategy::kMbr;
  if (name == "score") return Strategy::kScore;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kOracle: return "oracle";
    case Strategy::kMajority: return "majority";
    case Strategy::kMbr: return "mbr";
    case Strategy::kScore: return "score";
  }
  return "?";
}

namespace {

// Selection over an explicit (sorted) index subset of one query's hypotheses.
// Returns whether the chosen hypothesis is unacceptable.
bool subset_fails(const EmpiricalDataset& dataset, const Query& q,
                  const std::vector<long long>& subset, Strategy strategy, bool mbr_include_self) {
  std::vector<HypothesisRecord> rows;
  rows.reserve(subset.size());
  for (long long idx : subset) rows.push_back(q.hyps[static_cast<std::size_t>(idx)]);

  std::optional<long long> picked;
  switch (strategy) {
    case Strategy::kOracle:
      picked = select_oracle(rows);
      break;
    case Strategy::kScore:
      picked = select_by_score(rows);
      break;
    case Strategy::kMajority:
      picked = select_majority_vote(rows);
      break;
    case Strategy::kMbr: {
      const UtilityMatrix* m = dataset.utilities_for(q.query_id);
      if (!m) throw std::runtime_error("mbr strategy: no utility matrix for query '" + q.query_id + "'");
      UtilityMatrix sub;
      sub.query_id = m->query_id;
      sub.mode = m->mode;
      sub.values.resize(subset.size(), std::vector<double>(subset.size()));
      for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = 0; j < subset.size(); ++j) {
          sub.values[i][j] = m->values[static_cast<std::size_t>(subset[i])][static_cast<std::size_t>(subset[j])];
        }
      }
      picked = subset[static_cast<std::size_t>(select_mbr(sub, static_cast<long long>(subset.size()),
                                                          mbr_include_self))];
      break;
    }
  }
  if (!picked) return true;  // no answer emitted counts as a failure
  return !dataset.record_acceptable(q.hyps[static_cast<std::size_t>(*picked)]);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

EmpiricalCurveResult empirical_failure_curve(const EmpiricalDataset& dataset,
                                             const EmpiricalCurveOptions& options) {
  if (options.n_grid.empty()) throw std::invalid_argument("empirical_failure_curve: empty n grid");
  long long prev = 0;
  for (long long n : options.n_grid) {
    if (n < 1 || n <= prev) throw std::invalid_argument("empirical_failure_curve: n grid must be strictly increasing");
    prev = n;
  }
  const bool bootstrap = options.subsampling.kind == Subsampling::Kind::kBootstrap;
  if (bootstrap && options.subsampling.bootstrap_b < 1)
    throw std::invalid_argument("empirical_failure_curve: bootstrap needs B >= 1");

  EmpiricalCurveResult result;
  result.strategy = strategy_name(options.strategy);
  result.subsampling = bootstrap ? "bootstrap:" + std::to_string(options.subsampling.bootstrap_b) : "prefix";
  result.seed = options.subsampling.seed;

  for (long long n : options.n_grid) {
    double fail_sum = 0.0;
    std::uint64_t used = 0;
    long long dropped = 0;
    for (const auto& q : dataset.queries()) {
      const long long m = static_cast<long long>(q.hyps.size());
      if (m < n) {
        ++dropped;
        continue;
      }
      if (!bootstrap) {
        std::vector<long long> prefix(static_cast<std::size_t>(n));
        for (long long i = 0; i < n; ++i) prefix[static_cast<std::size_t>(i)] = i;
        fail_sum += subset_fails(dataset, q, prefix, options.strategy, options.mbr_include_self);
      } else {
        const int b_total = options.subsampling.bootstrap_b;
        double fails = 0.0;
        for (int b = 0; b < b_total; ++b) {
          SubstreamRng rng(options.subsampling.seed,
                           fnv1a(q.query_id) ^ static_cast<std::uint64_t>(n),
                           static_cast<std::uint64_t>(b));
          // partial Fisher-Yates draw of n indices out of m, then sorted
          std::vector<long long> pool(static_cast<std::size_t>(m));
          for (long long i = 0; i < m; ++i) pool[static_cast<std::size_t>(i)] = i;
          for (long long i = 0; i < n; ++i) {
            const long long j = i + static_cast<long long>(rng.next_unit() * static_cast<double>(m - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
          }
          std::vector<long long> subset(pool.begin(), pool.begin() + n);
          std::sort(subset.begin(), subset.end());
          fails += subset_fails(dataset, q, subset, options.strategy, options.mbr_include_self);
        }
        fail_sum += fails / static_cast<double>(b_total);
      }
      ++used;
    }
    CurvePoint pt;
    pt.n = n;
    pt.trials = used;
    pt.failure_rate = used > 0 ? fail_sum / static_cast<double>(used) : 0.0;
    if (used > 0) {
      const auto ci = wilson_interval(fail_sum, static_cast<double>(used), options.ci_level);
      pt.ci_low = ci.first;
      pt.ci_high = ci.second;
    }
    if (pt.failure_rate > 0.0) pt.log_failure_rate = std::log(pt.failure_rate);
    result.curve.points.push_back(pt);
    result.dropped_per_n.push_back(dropped);
  }
  return result;
}

}  // namespace rrlaws
