#include "rrlaws/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rrlaws/channel_sim.hpp"
#include "rrlaws/curve.hpp"
#include "rrlaws/empirical.hpp"
#include "rrlaws/error_laws.hpp"
#include "rrlaws/fit.hpp"
#include "rrlaws/predict.hpp"
#include "rrlaws/rank_models.hpp"

namespace rrlaws::cli {

namespace {

using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_num(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("cannot parse " + what + " from '" + s + "'");
  }
}

void require_arg(const std::string& cmd, const std::string& flag, bool present) {
  if (!present) throw UsageError(cmd + ": missing required --" + flag);
}

GeneratorSpec parse_generator(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "indep") {
    GeneratorSpec g = IndependentGenerator{parse_num(rest, "epsilon")};
    validate_generator(g);
    return g;
  }
  if (kind == "beta") {
    const auto parts = split(rest, ',');
    if (parts.size() != 2) throw std::runtime_error("generator 'beta' expects beta:<alpha>,<beta>");
    GeneratorSpec g = BetaCoupledGenerator{parse_num(parts[0], "alpha"), parse_num(parts[1], "beta")};
    validate_generator(g);
    return g;
  }
  throw std::runtime_error("unknown generator '" + spec + "' (use indep:<eps> or beta:<alpha>,<beta>)");
}

std::vector<double> load_explicit_marginals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  int eta_col = -1;
  std::vector<double> eta;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (eta_col < 0) {
      for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
        if (cells[i] == "eta") eta_col = i;
      }
      if (eta_col < 0) throw std::runtime_error(path + ": header must name a column 'eta'");
      continue;
    }
    if (eta_col >= static_cast<int>(cells.size()))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": missing eta cell");
    eta.push_back(parse_num(cells[eta_col], "eta"));
  }
  return eta;
}

RerankerSpec parse_reranker(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  RerankerSpec out;
  if (kind == "perfect") {
    out = PerfectReranker{};
  } else if (kind == "random") {
    out = RandomReranker{};
  } else if (kind == "mallows") {
    const double enl = parse_num(rest, "e_neg_lambda");
    if (!(enl >= 0.0 && enl <= 1.0)) throw std::runtime_error("mallows: e_neg_lambda must be in [0, 1]");
    out = MallowsReranker{-std::log(enl)};  // enl = 0 gives the perfect limit
  } else if (kind == "zipf") {
    const auto parts = split(rest, ',');
    if (parts.size() != 2) throw std::runtime_error("reranker 'zipf' expects zipf:<e_neg_lambda>,<gamma>");
    const double enl = parse_num(parts[0], "e_neg_lambda");
    if (!(enl > 0.0 && enl < 1.0)) throw std::runtime_error("zipf: e_neg_lambda must be in (0, 1)");
    out = ZipfMandelbrotReranker{-std::log(enl), parse_num(parts[1], "gamma")};
  } else if (kind == "poly") {
    const double r = parse_num(rest, "r");
    if (r != std::floor(r)) throw std::runtime_error("poly: r must be an integer");
    out = PolynomialReranker{static_cast<int>(r)};
  } else if (kind == "explicit") {
    if (rest.empty()) throw std::runtime_error("reranker 'explicit' expects explicit:<csv-path>");
    out = ExplicitReranker{load_explicit_marginals(rest)};
  } else {
    throw std::runtime_error("unknown reranker '" + spec +
                             "' (use perfect, random, mallows:<e>, zipf:<e>,<g>, poly:<r>, explicit:<path>)");
  }
  validate_reranker(out);
  return out;
}

std::vector<long long> parse_n_grid(const std::string& spec) {
  std::vector<long long> grid;
  const auto range_pos = spec.find("..");
  if (range_pos != std::string::npos) {
    const long long a = static_cast<long long>(parse_num(spec.substr(0, range_pos), "n range start"));
    const long long b = static_cast<long long>(parse_num(spec.substr(range_pos + 2), "n range end"));
    if (a < 1 || b < a) throw std::runtime_error("bad n range '" + spec + "'");
    for (long long n = a; n <= b; ++n) grid.push_back(n);
    return grid;
  }
  for (const auto& part : split(spec, ',')) grid.push_back(static_cast<long long>(parse_num(part, "n")));
  if (grid.empty() || grid.front() < 1) throw std::runtime_error("bad n grid '" + spec + "'");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (grid[i] <= grid[i - 1]) throw std::runtime_error("n grid must be strictly increasing");
  }
  return grid;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --config <json> mirrors every flag: file values fill in whatever was not
// given on the command line; explicit flags win.
class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App* cmd) : cmd_(cmd) {}

  template <typename T>
  void bind(const std::string& name, T* target) {
    setters_.emplace_back(name, [target](const json& v) { *target = v.get<T>(); });
  }

  void apply(const std::string& config_path) const {
    if (config_path.empty()) return;
    json cfg;
    try {
      cfg = json::parse(read_text_file(config_path));
    } catch (const json::exception& e) {
      throw std::runtime_error(config_path + ": " + e.what());
    }
    for (const auto& [name, setter] : setters_) {
      if (cfg.contains(name) && cmd_->count("--" + name) == 0) setter(cfg.at(name));
    }
  }

 private:
  CLI::App* cmd_;
  std::vector<std::pair<std::string, std::function<void(const json&)>>> setters_;
};

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct CurveArgs {
  std::string generator, reranker, n, output, config;
};

struct SimulateArgs {
  std::string generator, reranker, n, output, config;
  std::uint64_t trials = 10000;
  std::uint64_t seed = 0;
  double ci = 0.99;
  int threads = 1;
  std::uint64_t budget = 20000000000ull;
};

struct EmpiricalArgs {
  std::string records, utilities, subsample = "prefix", strategy = "oracle";
  std::string n, output, meta, config;
  double threshold = kNan;
  std::uint64_t seed = 0;
  bool mbr_include_self = false;
  double ci = 0.99;
};

struct FitArgs {
  std::string oracle, imperfect, output, config;
  bool weighted = false;
};

struct PredictArgs {
  std::string generator, reranker, params, output, config;
  double target = kNan;
  long long n_cap = 100000;
};

struct MarginalsArgs {
  std::string reranker, output, config;
  long long n = 0;
};

int run_curve(const CurveArgs& a) {
  require_arg("curve", "generator", !a.generator.empty());
  require_arg("curve", "reranker", !a.reranker.empty());
  require_arg("curve", "n", !a.n.empty());
  require_arg("curve", "output", !a.output.empty());
  const auto grid = parse_n_grid(a.n);
  const FailureCurve curve = evaluate_law(parse_generator(a.generator), parse_reranker(a.reranker), grid);
  write_text_file(a.output, curve_to_csv(curve));
  return 0;
}

int run_simulate(const SimulateArgs& a) {
  require_arg("simulate", "generator", !a.generator.empty());
  require_arg("simulate", "reranker", !a.reranker.empty());
  require_arg("simulate", "n", !a.n.empty());
  require_arg("simulate", "output", !a.output.empty());
  SimConfig config;
  config.generator = parse_generator(a.generator);
  config.reranker = parse_reranker(a.reranker);
  config.n_grid = parse_n_grid(a.n);
  config.trials = a.trials;
  config.seed = a.seed;
  config.ci_level = a.ci;
  config.threads = a.threads;
  config.draw_budget = a.budget;
  const FailureCurve curve = simulate_curve(config);
  write_text_file(a.output, curve_to_csv(curve));
  return 0;
}

int run_empirical(const EmpiricalArgs& a) {
  require_arg("empirical", "records", !a.records.empty());
  require_arg("empirical", "n", !a.n.empty());
  require_arg("empirical", "output", !a.output.empty());
  const std::optional<std::string> utilities =
      a.utilities.empty() ? std::nullopt : std::optional<std::string>(a.utilities);
  const std::optional<double> threshold =
      std::isnan(a.threshold) ? std::nullopt : std::optional<double>(a.threshold);
  const EmpiricalDataset dataset = load_dataset(a.records, utilities, threshold);

  EmpiricalCurveOptions options;
  options.strategy = strategy_from_name(a.strategy);
  options.n_grid = parse_n_grid(a.n);
  options.mbr_include_self = a.mbr_include_self;
  options.ci_level = a.ci;
  if (a.subsample == "prefix") {
    options.subsampling.kind = Subsampling::Kind::kPrefix;
  } else if (a.subsample.rfind("bootstrap:", 0) == 0) {
    options.subsampling.kind = Subsampling::Kind::kBootstrap;
    options.subsampling.bootstrap_b =
        static_cast<int>(parse_num(a.subsample.substr(10), "bootstrap B"));
    options.subsampling.seed = a.seed;
  } else {
    throw std::runtime_error("subsample must be 'prefix' or 'bootstrap:<B>'");
  }

  const EmpiricalCurveResult result = empirical_failure_curve(dataset, options);
  write_text_file(a.output, curve_to_csv(result.curve));

  json meta;
  meta["strategy"] = result.strategy;
  meta["subsampling"] = result.subsampling;
  meta["seed"] = result.seed;
  meta["queries"] = dataset.queries().size();
  meta["n_grid"] = options.n_grid;
  meta["dropped_per_n"] = result.dropped_per_n;
  if (!a.meta.empty()) write_text_file(a.meta, meta.dump(2) + "\n");
  const long long total_dropped =
      std::accumulate(result.dropped_per_n.begin(), result.dropped_per_n.end(), 0ll);
  if (total_dropped > 0) {
    std::cerr << "warning: " << total_dropped
              << " query/grid combinations dropped (fewer hypotheses than n)\n";
  }
  return 0;
}

int run_fit(const FitArgs& a) {
  require_arg("fit", "oracle", !a.oracle.empty());
  const FailureCurve oracle = read_curve_csv(a.oracle);
  std::optional<FailureCurve> imperfect;
  if (!a.imperfect.empty()) imperfect = read_curve_csv(a.imperfect);
  FitOptions options;
  options.weight_sqrt_trials = a.weighted;
  const FitReport report = fit_law(oracle, imperfect, options);
  const std::string text = fit_report_to_json(report);
  if (a.output.empty()) {
    std::cout << text;
  } else {
    write_text_file(a.output, text);
  }
  return 0;
}

int run_predict(const PredictArgs& a) {
  require_arg("predict", "target", !std::isnan(a.target));
  LawQuery query;
  if (!a.params.empty()) {
    const LawParams params = law_params_from_json(read_text_file(a.params));
    query.generator = generator_from_params(params);
    query.reranker = reranker_from_params(params);
  } else {
    if (a.generator.empty() || a.reranker.empty())
      throw UsageError("predict: needs either --params or both --generator and --reranker");
    query.generator = parse_generator(a.generator);
    query.reranker = parse_reranker(a.reranker);
  }
  query.target = a.target;
  query.n_cap = a.n_cap;
  const MinNResult result = min_n_for_target(query);
  const std::string text = min_n_result_to_json(result);
  if (a.output.empty()) {
    std::cout << text;
  } else {
    write_text_file(a.output, text);
  }
  return 0;
}

int run_marginals(const MarginalsArgs& a) {
  require_arg("marginals", "reranker", !a.reranker.empty());
  require_arg("marginals", "n", a.n != 0);
  require_arg("marginals", "output", !a.output.empty());
  const TopOneMarginals marginals = top1_marginals(parse_reranker(a.reranker), a.n);
  std::string csv = "rank,eta\n";
  for (std::size_t j = 1; j <= marginals.size(); ++j) {
    csv += std::to_string(j);
    csv += ',';
    csv += format_double(marginals.at_rank(j));
    csv += '\n';
  }
  write_text_file(a.output, csv);
  return 0;
}

}  // namespace

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Failure laws of generator-reranker pipelines: analytic curves, Monte-Carlo\n"
               "simulation, empirical strategy replay, two-stage law fitting, and inversion."};
  app.name("rrlaws");
  app.require_subcommand(0, 1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "Report errors as JSON on stderr");

  CurveArgs curve_args;
  SimulateArgs sim_args;
  EmpiricalArgs emp_args;
  FitArgs fit_args;
  PredictArgs pred_args;
  MarginalsArgs marg_args;

  auto* curve_cmd = app.add_subcommand("curve", "Evaluate an analytic failure law over an N grid");
  curve_cmd->add_option("--generator", curve_args.generator, "indep:<eps> or beta:<alpha>,<beta>");
  curve_cmd->add_option("--reranker", curve_args.reranker,
                        "perfect | random | mallows:<e^-l> | zipf:<e^-l>,<gamma> | poly:<r> | explicit:<csv>");
  curve_cmd->add_option("--n", curve_args.n, "N grid, a..b or comma list");
  curve_cmd->add_option("-o,--output", curve_args.output, "Output CSV path");
  curve_cmd->add_option("--config", curve_args.config, "JSON file mirroring the flags");
  ConfigBinder curve_binder(curve_cmd);
  curve_binder.bind("generator", &curve_args.generator);
  curve_binder.bind("reranker", &curve_args.reranker);
  curve_binder.bind("n", &curve_args.n);
  curve_binder.bind("output", &curve_args.output);

  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo failure curve with Wilson intervals");
  sim_cmd->add_option("--generator", sim_args.generator, "indep:<eps> or beta:<alpha>,<beta>");
  sim_cmd->add_option("--reranker", sim_args.reranker, "Reranker spec");
  sim_cmd->add_option("--n", sim_args.n, "N grid, a..b or comma list");
  sim_cmd->add_option("--trials", sim_args.trials, "Simulated queries per grid point");
  sim_cmd->add_option("--seed", sim_args.seed, "RNG seed");
  sim_cmd->add_option("--ci", sim_args.ci, "Confidence level for the intervals");
  sim_cmd->add_option("--threads", sim_args.threads, "Worker cap; never changes results");
  sim_cmd->add_option("--budget", sim_args.budget, "Refuse runs with trials * sum(n) above this");
  sim_cmd->add_option("-o,--output", sim_args.output, "Output CSV path");
  sim_cmd->add_option("--config", sim_args.config, "JSON file mirroring the flags");
  ConfigBinder sim_binder(sim_cmd);
  sim_binder.bind("generator", &sim_args.generator);
  sim_binder.bind("reranker", &sim_args.reranker);
  sim_binder.bind("n", &sim_args.n);
  sim_binder.bind("trials", &sim_args.trials);
  sim_binder.bind("seed", &sim_args.seed);
  sim_binder.bind("ci", &sim_args.ci);
  sim_binder.bind("threads", &sim_args.threads);
  sim_binder.bind("budget", &sim_args.budget);
  sim_binder.bind("output", &sim_args.output);

  auto* emp_cmd = app.add_subcommand("empirical", "Replay a reranking strategy over recorded hypotheses");
  emp_cmd->add_option("--records", emp_args.records, "JSON-lines hypothesis records");
  emp_cmd->add_option("--utilities", emp_args.utilities, "JSON-lines utility matrices (for mbr)");
  emp_cmd->add_option("--threshold", emp_args.threshold, "Acceptability threshold on oracle_score");
  emp_cmd->add_option("--strategy", emp_args.strategy, "oracle | majority | mbr | score");
  emp_cmd->add_option("--subsample", emp_args.subsample, "prefix or bootstrap:<B>");
  emp_cmd->add_option("--seed", emp_args.seed, "Seed for bootstrap subsampling");
  emp_cmd->add_flag("--mbr-include-self", emp_args.mbr_include_self, "Keep self-utility in MBR sums");
  emp_cmd->add_option("--ci", emp_args.ci, "Confidence level for the intervals");
  emp_cmd->add_option("--n", emp_args.n, "N grid, a..b or comma list");
  emp_cmd->add_option("-o,--output", emp_args.output, "Output CSV path");
  emp_cmd->add_option("--meta", emp_args.meta, "Write run metadata JSON here");
  emp_cmd->add_option("--config", emp_args.config, "JSON file mirroring the flags");
  ConfigBinder emp_binder(emp_cmd);
  emp_binder.bind("records", &emp_args.records);
  emp_binder.bind("utilities", &emp_args.utilities);
  emp_binder.bind("threshold", &emp_args.threshold);
  emp_binder.bind("strategy", &emp_args.strategy);
  emp_binder.bind("subsample", &emp_args.subsample);
  emp_binder.bind("seed", &emp_args.seed);
  emp_binder.bind("mbr-include-self", &emp_args.mbr_include_self);
  emp_binder.bind("ci", &emp_args.ci);
  emp_binder.bind("n", &emp_args.n);
  emp_binder.bind("output", &emp_args.output);
  emp_binder.bind("meta", &emp_args.meta);

  auto* fit_cmd = app.add_subcommand("fit", "Two-stage least-squares law fit from two curves");
  fit_cmd->add_option("--oracle", fit_args.oracle, "Perfect-reranker curve CSV");
  fit_cmd->add_option("--imperfect", fit_args.imperfect, "Imperfect-reranker curve CSV");
  fit_cmd->add_flag("--weighted", fit_args.weighted, "Weight residuals by sqrt(trials)");
  fit_cmd->add_option("-o,--output", fit_args.output, "Report JSON path (stdout when absent)");
  fit_cmd->add_option("--config", fit_args.config, "JSON file mirroring the flags");
  ConfigBinder fit_binder(fit_cmd);
  fit_binder.bind("oracle", &fit_args.oracle);
  fit_binder.bind("imperfect", &fit_args.imperfect);
  fit_binder.bind("weighted", &fit_args.weighted);
  fit_binder.bind("output", &fit_args.output);

  auto* pred_cmd = app.add_subcommand("predict", "Minimal N reaching a target failure probability");
  pred_cmd->add_option("--generator", pred_args.generator, "Generator spec (or use --params)");
  pred_cmd->add_option("--reranker", pred_args.reranker, "Reranker spec (or use --params)");
  pred_cmd->add_option("--params", pred_args.params, "Fitted-params JSON path");
  pred_cmd->add_option("--target", pred_args.target, "Target failure probability in (0,1)");
  pred_cmd->add_option("--n-cap", pred_args.n_cap, "Search cap on N");
  pred_cmd->add_option("-o,--output", pred_args.output, "Result JSON path (stdout when absent)");
  pred_cmd->add_option("--config", pred_args.config, "JSON file mirroring the flags");
  ConfigBinder pred_binder(pred_cmd);
  pred_binder.bind("generator", &pred_args.generator);
  pred_binder.bind("reranker", &pred_args.reranker);
  pred_binder.bind("params", &pred_args.params);
  pred_binder.bind("target", &pred_args.target);
  pred_binder.bind("n-cap", &pred_args.n_cap);
  pred_binder.bind("output", &pred_args.output);

  auto* marg_cmd = app.add_subcommand("marginals", "Top-pick oracle-rank distribution of a reranker");
  marg_cmd->add_option("--reranker", marg_args.reranker, "Reranker spec");
  marg_cmd->add_option("--n", marg_args.n, "Hypothesis count");
  marg_cmd->add_option("-o,--output", marg_args.output, "Output CSV path");
  marg_cmd->add_option("--config", marg_args.config, "JSON file mirroring the flags");
  ConfigBinder marg_binder(marg_cmd);
  marg_binder.bind("reranker", &marg_args.reranker);
  marg_binder.bind("n", &marg_args.n);
  marg_binder.bind("output", &marg_args.output);

  std::reverse(args.begin(), args.end());  // CLI11 vector parse wants reversed args
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    std::cout << (subs.empty() ? app.help() : subs.front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun 'rrlaws --help' for usage\n";
    return 2;
  }

  try {
    if (curve_cmd->parsed()) {
      curve_binder.apply(curve_args.config);
      return run_curve(curve_args);
    }
    if (sim_cmd->parsed()) {
      sim_binder.apply(sim_args.config);
      return run_simulate(sim_args);
    }
    if (emp_cmd->parsed()) {
      emp_binder.apply(emp_args.config);
      return run_empirical(emp_args);
    }
    if (fit_cmd->parsed()) {
      fit_binder.apply(fit_args.config);
      return run_fit(fit_args);
    }
    if (pred_cmd->parsed()) {
      pred_binder.apply(pred_args.config);
      return run_predict(pred_args);
    }
    if (marg_cmd->parsed()) {
      marg_binder.apply(marg_args.config);
      return run_marginals(marg_args);
    }
    std::cerr << "usage error: missing subcommand\nrun 'rrlaws --help' for usage\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun 'rrlaws --help' for usage\n";
    return 2;
  } catch (const std::exception& e) {
    if (json_errors) {
      const json err = {{"error", e.what()}};
      std::cerr << err.dump() << "\n";
    } else {
      std::cerr << "error: " << e.what() << "\n";
    }
    return 1;
  }
}

}  // namespace rrlaws::cli
