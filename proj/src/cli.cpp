#include "mgq/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <memory>

#include "mgq/csv.hpp"
#include "mgq/errors.hpp"
#include "mgq/market_graph.hpp"
#include "mgq/qubo.hpp"

namespace mgq::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

spdlog::logger& log() {
  static auto logger =
      std::make_shared<spdlog::logger>("mgq", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  return *logger;
}

// Files written by a command; removed again unless the command commits.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

  fs::path add(const std::string& name) {
    written_.push_back(dir_ / name);
    return written_.back();
  }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

// Solver flags shared by `solve` and `pipeline`; unset flags leave the config alone.
struct SolverFlags {
  std::optional<int> sweeps;
  std::optional<int> restarts;
  std::optional<double> t_initial;
  std::optional<double> t_final;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool no_repair = false;

  void add_to(CLI::App& app) {
    app.add_option("--sweeps", sweeps, "Monte Carlo sweeps per restart");
    app.add_option("--restarts", restarts, "Independent annealing restarts");
    app.add_option("--t-initial", t_initial, "Initial temperature (default: calibrated)");
    app.add_option("--t-final", t_final, "Final temperature (default: 1e-3 * initial)");
    app.add_option("--seed", seed, "Top-level random seed");
    app.add_option("--threads", threads, "Worker threads for restarts (0 = all cores)");
    app.add_flag("--no-repair", no_repair, "Skip the cardinality repair step");
  }

  void apply(AnnealConfig& c) const {
    if (sweeps) c.sweeps = *sweeps;
    if (restarts) c.restarts = *restarts;
    if (t_initial) c.t_initial = *t_initial;
    if (t_final) c.t_final = *t_final;
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (no_repair) c.repair = false;
  }
};

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
}

ReturnsPanel load_panel(const std::optional<fs::path>& prices, const std::optional<fs::path>& returns,
                        MissingPolicy policy) {
  if (returns) {
    require_file(*returns, "returns file");
    return load_returns(*returns);
  }
  if (!prices) throw ConfigError("one of --prices or --returns is required");
  require_file(*prices, "prices file");
  auto panel = compute_log_returns(load_prices(*prices), policy);
  log().info("loaded {} assets x {} return dates", panel.num_assets(), panel.num_dates());
  return panel;
}

std::vector<std::string> read_tickers(const fs::path& path) {
  require_file(path, "exemplar file");
  std::ifstream in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(first, last - first + 1));
  }
  if (out.empty()) throw MalformedInputError(path.string() + ": no exemplars listed");
  return out;
}

void write_tickers(const std::vector<std::string>& tickers, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& t : tickers) out << t << '\n';
}

void write_text(const std::string& text, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

json solve_json(const SolveResult& r, const std::vector<std::string>& tickers) {
  return json{{"exemplars", tickers},
              {"indices", r.best.exemplars},
              {"energy", r.best_energy},
              {"feasible", r.feasible},
              {"seed", r.seed_used},
              {"t_initial", r.t_initial},
              {"t_final", r.t_final},
              {"energy_trace", r.energy_trace}};
}

json solver_json(const AnnealConfig& s) {
  json j{{"sweeps", s.sweeps},      {"restarts", s.restarts}, {"schedule", "geometric"},
         {"seed", s.seed},          {"repair", s.repair},     {"threads", s.threads},
         {"t_initial", nullptr},    {"t_final", nullptr}};
  if (s.t_initial) j["t_initial"] = *s.t_initial;
  if (s.t_final) j["t_final"] = *s.t_final;
  return j;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return kValidation;
    case ErrorKind::data: return kData;
    case ErrorKind::solver: return kSolver;
  }
  return kData;
}

template <typename T>
T json_get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (years.empty()) throw ConfigError("years must not be empty");
  if (!std::is_sorted(years.begin(), years.end()) ||
      std::adjacent_find(years.begin(), years.end()) != years.end()) {
    throw ConfigError("years must be strictly increasing");
  }
  if (k < 1) throw ConfigError("k must be >= 1");
  if (prices_path.empty()) throw ConfigError("prices path is required");
  require_file(prices_path, "prices file");
  if (index_csv) require_file(*index_csv, "index file");
  solver.validate();
}

fs::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "out";
}

void apply_config_file(RunConfig& config, const fs::path& path) {
  require_file(path, "config file");
  json j;
  try {
    std::ifstream in(path);
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": expected a JSON object");

  // Relative paths resolve against the config file's directory.
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  static const std::vector<std::string> kKeys{"prices",    "years",     "k",          "missing_policy",
                                              "weighting", "index_csv", "output_dir", "solver"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end())
      throw ConfigError(path.string() + ": unknown key '" + key + "'");
  }
  if (j.contains("prices")) config.prices_path = resolve(json_get<std::string>(j, "prices"));
  if (j.contains("years")) config.years = json_get<std::vector<int>>(j, "years");
  if (j.contains("k")) config.k = json_get<int>(j, "k");
  if (j.contains("missing_policy"))
    config.missing_policy = parse_missing_policy(json_get<std::string>(j, "missing_policy"));
  if (j.contains("weighting")) config.weighting = parse_weighting(json_get<std::string>(j, "weighting"));
  if (j.contains("index_csv") && !j["index_csv"].is_null())
    config.index_csv = resolve(json_get<std::string>(j, "index_csv"));
  if (j.contains("output_dir")) config.output_dir = resolve(json_get<std::string>(j, "output_dir"));
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (!s.is_object()) throw ConfigError("config key 'solver' must be an object");
    auto& c = config.solver;
    for (const auto& [key, value] : s.items()) {
      if (key == "sweeps") c.sweeps = json_get<int>(s, "sweeps");
      else if (key == "restarts") c.restarts = json_get<int>(s, "restarts");
      else if (key == "seed") c.seed = json_get<std::uint64_t>(s, "seed");
      else if (key == "repair") c.repair = json_get<bool>(s, "repair");
      else if (key == "threads") c.threads = json_get<unsigned>(s, "threads");
      else if (key == "schedule") {
        if (json_get<std::string>(s, "schedule") != "geometric")
          throw ConfigError("only the geometric schedule is supported");
      } else if (key == "t_initial") {
        if (!value.is_null()) c.t_initial = json_get<double>(s, "t_initial");
      } else if (key == "t_final") {
        if (!value.is_null()) c.t_final = json_get<double>(s, "t_final");
      } else {
        throw ConfigError(path.string() + ": unknown solver key '" + key + "'");
      }
    }
  }
}

std::string config_json(const RunConfig& config) {
  json j{{"prices", config.prices_path.string()},
         {"years", config.years},
         {"k", config.k},
         {"missing_policy", std::string(to_string(config.missing_policy))},
         {"weighting", std::string(to_string(config.weighting))},
         {"index_csv", nullptr},
         {"output_dir", config.output_dir.string()},
         {"solver", solver_json(config.solver)}};
  if (config.index_csv) j["index_csv"] = config.index_csv->string();
  return j.dump(2);
}

std::vector<TrackingReport> run_pipeline(const RunConfig& config) {
  config.validate();
  const ReturnsPanel panel = compute_log_returns(load_prices(config.prices_path), config.missing_policy);
  log().info("universe: {} assets, {} return dates ({} .. {})", panel.num_assets(), panel.num_dates(),
             panel.dates.front().iso(), panel.dates.back().iso());

  BacktestOptions options;
  options.k = config.k;
  options.weighting = config.weighting;
  options.solver = config.solver;
  if (config.index_csv) options.index = load_index_returns(*config.index_csv);

  const auto results = run_annual_backtest_detailed(panel, config.years, options);

  OutputSet out(config.output_dir.empty() ? default_output_dir() : config.output_dir);
  std::vector<TrackingReport> reports;
  json years = json::array();
  for (const auto& r : results) {
    const auto& rep = r.report;
    log().info("{}: exemplars [{}] tracking error {:.6f} beta {:.4f} t {:.3f}", rep.year,
               csv::join(rep.exemplars, " "), rep.tracking_error, rep.beta, rep.t_stat);
    if (!r.fit.solve.feasible) log().warn("{}: solver returned an infeasible selection", rep.year);
    write_series_csv(rep, out.add("series_" + std::to_string(rep.year) + ".csv"));
    write_tickers(rep.exemplars, out.add("exemplars_" + std::to_string(rep.year) + ".txt"));
    json y = solve_json(r.fit.solve, r.fit.exemplars);
    y["year"] = rep.year;
    y["fit_start"] = r.fit.graph.fit_start.iso();
    y["fit_end"] = r.fit.graph.fit_end.iso();
    y["t_stat_beta_one"] = csv::format_double(rep.t_stat_beta_one);
    years.push_back(std::move(y));
    reports.push_back(rep);
  }
  write_report_csv(reports, out.add("report.csv"));

  json manifest{{"tool", "mgq"},
                {"version", kVersion},
                {"compiler", __VERSION__},
                {"cxx_standard", __cplusplus},
                {"config", json::parse(config_json(config))},
                {"universe", {{"assets", panel.num_assets()}, {"dates", panel.num_dates()}}},
                {"years", years}};
  write_text(manifest.dump(2) + "\n", out.add("manifest.json"));
  out.commit();
  return reports;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Index tracking via K-medoid QUBO clustering of a market graph", "mgq"};
  app.require_subcommand(1);
  bool quiet = false;
  bool verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only log errors");
  app.add_flag("-v,--verbose", verbose, "Log debug detail");

  std::function<void()> action;
  std::optional<fs::path> prices, returns, out_dir, out_file, delta_path, exemplars_path, dist_path,
      index_csv, config_path, run_dir, qubo_export;
  std::string policy_text = "drop-asset";
  std::string weighting_text = "equal";
  std::optional<int> year, k;
  std::vector<int> years;
  SolverFlags solver_flags;

  auto add_prices = [&](CLI::App* sub) {
    sub->add_option("--prices", prices, "Price CSV (long or wide layout)");
    sub->add_option("--missing-policy", policy_text, "drop-asset | forward-fill | drop-date")
        ->check(CLI::IsMember({"drop-asset", "forward-fill", "drop-date"}));
  };

  auto* ingest = app.add_subcommand("ingest", "Convert prices to a log-return panel");
  add_prices(ingest);
  ingest->add_option("--out", out_file, "Returns CSV to write (default <output dir>/returns.csv)");
  ingest->callback([&] {
    action = [&] {
      const auto panel = load_panel(prices, std::nullopt, parse_missing_policy(policy_text));
      const fs::path target = out_file ? *out_file : default_output_dir() / "returns.csv";
      if (target.has_parent_path()) fs::create_directories(target.parent_path());
      write_returns(panel, target);
      log().info("wrote {}", target.string());
    };
  });

  auto* graph = app.add_subcommand("graph", "Emit correlation, distance and robust matrices");
  add_prices(graph);
  graph->add_option("--returns", returns, "Returns CSV from `ingest`");
  graph->add_option("--year", year, "Fit on this calendar year only");
  graph->add_option("--out-dir", out_dir, "Output directory");
  graph->callback([&] {
    action = [&] {
      auto panel = load_panel(prices, returns, parse_missing_policy(policy_text));
      if (year) panel = slice_year(panel, *year);
      const auto g = build_market_graph(panel);
      OutputSet out(out_dir.value_or(default_output_dir()));
      write_matrix_csv(out.add("rho.csv"), g.assets, g.rho);
      write_matrix_csv(out.add("dist.csv"), g.assets, g.dist);
      write_matrix_csv(out.add("delta.csv"), g.assets, g.delta);
      out.commit();
      log().info("graph over {} assets, fit window {} .. {}", g.size(), g.fit_start.iso(), g.fit_end.iso());
    };
  });

  auto* solve = app.add_subcommand("solve", "Select k exemplars from a robust dissimilarity matrix");
  solve->add_option("--delta", delta_path, "Robust matrix CSV from `graph`")->required();
  solve->add_option("--k", k, "Number of exemplars")->required();
  solve->add_option("--out-dir", out_dir, "Output directory");
  solve->add_option("--export-qubo", qubo_export, "Also write the QUBO as triplets");
  solver_flags.add_to(*solve);
  solve->callback([&] {
    action = [&] {
      require_file(*delta_path, "delta file");
      const auto delta = read_matrix_csv(*delta_path);
      AnnealConfig config;
      solver_flags.apply(config);
      const auto problem = build_kmedoid_qubo(delta.values, *k);
      const auto result = solve_anneal(problem, config);
      std::vector<std::string> tickers;
      for (auto i : result.best.exemplars) tickers.push_back(delta.labels[i]);
      OutputSet out(out_dir.value_or(default_output_dir()));
      if (qubo_export) export_triplets(problem, *qubo_export);
      write_tickers(tickers, out.add("exemplars.txt"));
      write_text(solve_json(result, tickers).dump(2) + "\n", out.add("solve.json"));
      out.commit();
      log().info("energy {} ({}), exemplars [{}]", result.best_energy,
                 result.feasible ? "feasible" : "infeasible", csv::join(tickers, " "));
    };
  });

  auto* backtest = app.add_subcommand("backtest", "Evaluate an exemplar portfolio over one year");
  add_prices(backtest);
  backtest->add_option("--returns", returns, "Returns CSV from `ingest`");
  backtest->add_option("--exemplars", exemplars_path, "Exemplar tickers, one per line")->required();
  backtest->add_option("--year", year, "Evaluation year")->required();
  backtest->add_option("--weighting", weighting_text, "equal | cluster-size")
      ->check(CLI::IsMember({"equal", "cluster-size"}));
  backtest->add_option("--dist", dist_path, "Fit-window distance CSV (cluster-size weighting)");
  backtest->add_option("--index-csv", index_csv, "Index return series (date,return)");
  backtest->add_option("--out-dir", out_dir, "Output directory");
  backtest->callback([&] {
    action = [&] {
      const auto panel = load_panel(prices, returns, parse_missing_policy(policy_text));
      const auto weighting = parse_weighting(weighting_text);
      std::optional<MarketGraph> g;
      if (dist_path) {
        require_file(*dist_path, "distance file");
        auto d = read_matrix_csv(*dist_path);
        g = MarketGraph{std::move(d.labels), {}, std::move(d.values), {}, {}, {}};
      }
      std::optional<DatedSeries> index;
      if (index_csv) {
        require_file(*index_csv, "index file");
        index = load_index_returns(*index_csv);
      }
      const auto report = evaluate_portfolio(slice_year(panel, *year), *year, read_tickers(*exemplars_path),
                                             weighting, g ? &*g : nullptr, index ? &*index : nullptr);
      OutputSet out(out_dir.value_or(default_output_dir()));
      write_report_csv(std::span(&report, 1), out.add("report.csv"));
      write_series_csv(report, out.add("series_" + std::to_string(*year) + ".csv"));
      out.commit();
      log().info("{}: tracking error {:.6f} beta {:.4f} t {:.3f}", report.year, report.tracking_error,
                 report.beta, report.t_stat);
    };
  });

  auto* pipeline = app.add_subcommand("pipeline", "Run ingest, graph, solve and backtest per year");
  pipeline->add_option("--config", config_path, "JSON run configuration");
  add_prices(pipeline);
  pipeline->add_option("--years", years, "Evaluation years, comma separated")->delimiter(',');
  pipeline->add_option("--k", k, "Number of exemplars");
  pipeline->add_option("--weighting", weighting_text, "equal | cluster-size")
      ->check(CLI::IsMember({"equal", "cluster-size"}));
  pipeline->add_option("--index-csv", index_csv, "Index return series (date,return)");
  pipeline->add_option("--out-dir", out_dir, "Output directory");
  solver_flags.add_to(*pipeline);
  pipeline->callback([&] {
    action = [&] {
      RunConfig config;
      config.output_dir = default_output_dir();
      if (config_path) apply_config_file(config, *config_path);
      if (prices) config.prices_path = *prices;
      if (!years.empty()) config.years = years;
      if (k) config.k = *k;
      if (pipeline->count("--missing-policy")) config.missing_policy = parse_missing_policy(policy_text);
      if (pipeline->count("--weighting")) config.weighting = parse_weighting(weighting_text);
      if (index_csv) config.index_csv = *index_csv;
      if (out_dir) config.output_dir = *out_dir;
      solver_flags.apply(config.solver);
      run_pipeline(config);
      log().info("wrote outputs to {}", config.output_dir.string());
    };
  });

  auto* plot = app.add_subcommand("plot-data", "Merge per-year series of a pipeline run for plotting");
  plot->add_option("--run-dir", run_dir, "Pipeline output directory")->required();
  plot->add_option("--out", out_file, "Merged CSV (default <run-dir>/plot_data.csv)");
  plot->callback([&] {
    action = [&] {
      const fs::path report_path = *run_dir / "report.csv";
      require_file(report_path, "report");
      const fs::path target = out_file.value_or(*run_dir / "plot_data.csv");
      std::ofstream out(target);
      if (!out) throw DataError("cannot write '" + target.string() + "'");
      out << "year,date,r_index,r_port,diff\n";
      const auto rows = csv::read(report_path);
      for (std::size_t r = 1; r < rows.size(); ++r) {
        const std::string y = rows[r].fields.at(0);
        const fs::path series = *run_dir / ("series_" + y + ".csv");
        require_file(series, "series file");
        const auto lines = csv::read(series);
        for (std::size_t i = 1; i < lines.size(); ++i) out << y << ',' << csv::join(lines[i].fields, ",") << '\n';
      }
      log().info("wrote {}", target.string());
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  log().set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::info);
  try {
    action();
    return kOk;
  } catch (const Error& e) {
    log().error("{}", e.what());
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    log().error("{}", e.what());
    return kData;
  } catch (const std::exception& e) {
    log().error("{}", e.what());
    return kData;
  }
}

}  // namespace mgq::cli
