#include "mgq/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "mgq/csv.hpp"
#include "mgq/errors.hpp"

namespace mgq {
namespace {

std::size_t find_asset(std::span<const std::string> assets, const std::string& ticker,
                       std::string_view where) {
  const auto it = std::find(assets.begin(), assets.end(), ticker);
  if (it == assets.end()) {
    throw MismatchError("exemplar " + ticker + " not found in " + std::string(where));
  }
  return static_cast<std::size_t>(it - assets.begin());
}

double ratio_or_sentinel(double numerator, double se) {
  if (se > 0.0) return numerator / se;
  if (numerator == 0.0) return 0.0;
  return std::copysign(std::numeric_limits<double>::infinity(), numerator);
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

Weighting parse_weighting(std::string_view text) {
  if (text == "equal") return Weighting::equal;
  if (text == "cluster-size") return Weighting::cluster_size;
  throw ParameterError("unknown weighting '" + std::string(text) + "' (expected equal or cluster-size)");
}

std::string_view to_string(Weighting weighting) {
  return weighting == Weighting::equal ? "equal" : "cluster-size";
}

std::vector<double> portfolio_weights(std::span<const std::string> exemplars, Weighting weighting,
                                      const MarketGraph* graph) {
  if (exemplars.empty()) throw ParameterError("portfolio needs at least one exemplar");
  const std::size_t k = exemplars.size();
  if (weighting == Weighting::equal) return std::vector<double>(k, 1.0 / static_cast<double>(k));

  if (!graph) throw ParameterError("cluster-size weighting needs the fit-window market graph");
  const std::size_t n = graph->size();
  std::vector<std::size_t> centers(k);
  for (std::size_t e = 0; e < k; ++e) centers[e] = find_asset(graph->assets, exemplars[e], "market graph");

  std::vector<std::size_t> wins(k, 0);
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t owner = 0;
    for (std::size_t e = 1; e < k; ++e) {
      const double d = graph->dist(a, centers[e]);
      const double best = graph->dist(a, centers[owner]);
      if (d < best || (d == best && centers[e] < centers[owner])) owner = e;
    }
    ++wins[owner];
  }
  std::vector<double> w(k);
  for (std::size_t e = 0; e < k; ++e) w[e] = static_cast<double>(wins[e]) / static_cast<double>(n);
  return w;
}

DatedSeries portfolio_returns(const ReturnsPanel& panel, std::span<const std::string> exemplars,
                              Weighting weighting, const MarketGraph* graph) {
  const auto weights = portfolio_weights(exemplars, weighting, graph);
  DatedSeries out{panel.dates, std::vector<double>(panel.num_dates(), 0.0)};
  for (std::size_t e = 0; e < exemplars.size(); ++e) {
    const auto row = panel.returns.row(find_asset(panel.assets, exemplars[e], "returns panel"));
    // Equal weights sum first and divide once, matching index_returns exactly.
    const double w = weighting == Weighting::equal ? 1.0 : weights[e];
    for (std::size_t t = 0; t < row.size(); ++t) out.values[t] += w * row[t];
  }
  if (weighting == Weighting::equal)
    for (auto& v : out.values) v /= static_cast<double>(exemplars.size());
  return out;
}

DatedSeries portfolio_returns(const ReturnsPanel& panel, const Selection& selection,
                              Weighting weighting, const MarketGraph* graph) {
  std::vector<std::string> tickers;
  for (auto i : selection.exemplars) {
    if (i >= panel.num_assets()) throw MismatchError("exemplar index out of range for panel");
    tickers.push_back(panel.assets[i]);
  }
  return portfolio_returns(panel, tickers, weighting, graph);
}

DatedSeries index_returns(const ReturnsPanel& panel) {
  if (panel.num_assets() == 0 || panel.num_dates() == 0) {
    throw InsufficientDataError("no data: cannot form an index from an empty panel");
  }
  DatedSeries out{panel.dates, std::vector<double>(panel.num_dates(), 0.0)};
  for (std::size_t t = 0; t < panel.num_dates(); ++t) {
    double sum = 0.0;
    for (std::size_t a = 0; a < panel.num_assets(); ++a) sum += panel.returns(a, t);
    out.values[t] = sum / static_cast<double>(panel.num_assets());
  }
  return out;
}

DatedSeries align_index(const DatedSeries& supplied, std::span<const Date> dates) {
  DatedSeries out;
  for (const auto& d : dates) {
    const auto it = std::lower_bound(supplied.dates.begin(), supplied.dates.end(), d);
    if (it == supplied.dates.end() || *it != d) {
      throw AlignmentError("index series has no return for " + d.iso());
    }
    out.dates.push_back(d);
    out.values.push_back(supplied.values[static_cast<std::size_t>(it - supplied.dates.begin())]);
  }
  return out;
}

double tracking_error(std::span<const double> r_index, std::span<const double> r_port) {
  if (r_index.size() != r_port.size()) {
    throw AlignmentError("index and portfolio series differ in length (" +
                         std::to_string(r_index.size()) + " vs " + std::to_string(r_port.size()) + ")");
  }
  const std::size_t n = r_index.size();
  if (n < 2) throw InsufficientDataError("tracking error needs at least 2 observations");
  double mean = 0.0;
  for (std::size_t t = 0; t < n; ++t) mean += r_index[t] - r_port[t];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double dev = (r_index[t] - r_port[t]) - mean;
    ss += dev * dev;
  }
  return std::sqrt(ss / static_cast<double>(n - 1));
}

Regression beta_regression(std::span<const double> r_index, std::span<const double> r_port) {
  if (r_index.size() != r_port.size()) throw AlignmentError("regression series differ in length");
  const std::size_t n = r_index.size();
  if (n < 3) throw InsufficientDataError("regression needs at least 3 observations");

  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    mx += r_index[t];
    my += r_port[t];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    sxx += (r_index[t] - mx) * (r_index[t] - mx);
    sxy += (r_index[t] - mx) * (r_port[t] - my);
  }
  const bool constant = std::all_of(r_index.begin(), r_index.end(),
                                    [&](double x) { return x == r_index.front(); });
  if (constant || !(sxx > 0.0)) throw DegenerateRegressorError("index returns have zero variance");

  Regression reg;
  reg.beta = sxy / sxx;
  reg.alpha = my - reg.beta * mx;
  double rss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double resid = r_port[t] - reg.alpha - reg.beta * r_index[t];
    rss += resid * resid;
  }
  reg.se_beta = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  reg.t_stat = ratio_or_sentinel(reg.beta, reg.se_beta);
  reg.t_stat_beta_one = ratio_or_sentinel(reg.beta - 1.0, reg.se_beta);
  return reg;
}

TrackingReport evaluate_portfolio(const ReturnsPanel& eval, int year,
                                  std::span<const std::string> exemplars, Weighting weighting,
                                  const MarketGraph* graph, const DatedSeries* index) {
  if (eval.num_dates() < 3) {
    throw InsufficientDataError("year " + std::to_string(year) + " has " +
                                std::to_string(eval.num_dates()) + " return dates; need at least 3");
  }
  const DatedSeries port = portfolio_returns(eval, exemplars, weighting, graph);
  const DatedSeries bench = index ? align_index(*index, eval.dates) : index_returns(eval);

  TrackingReport report;
  report.year = year;
  report.exemplars.assign(exemplars.begin(), exemplars.end());
  report.tracking_error = tracking_error(bench.values, port.values);
  const Regression reg = beta_regression(bench.values, port.values);
  report.beta = reg.beta;
  report.intercept = reg.alpha;
  report.t_stat = reg.t_stat;
  report.t_stat_beta_one = reg.t_stat_beta_one;
  for (std::size_t t = 0; t < eval.num_dates(); ++t)
    report.series.push_back({eval.dates[t], bench.values[t], port.values[t]});
  return report;
}

ExemplarFit fit_exemplars(const ReturnsPanel& fit_panel, int k, const AnnealConfig& solver,
                          const KMedoidOptions& qubo) {
  MarketGraph graph = build_market_graph(fit_panel);
  QuboProblem problem = build_kmedoid_qubo(graph.delta, k, qubo);
  SolveResult solve = solve_anneal(problem, solver);
  std::vector<std::string> exemplars;
  for (auto i : solve.best.exemplars) exemplars.push_back(graph.assets[i]);
  return {std::move(graph), std::move(problem), std::move(solve), std::move(exemplars)};
}

std::vector<YearResult> run_annual_backtest_detailed(const ReturnsPanel& full_panel,
                                                     std::span<const int> years,
                                                     const BacktestOptions& options) {
  std::vector<YearResult> results;
  for (int year : years) {
    ReturnsPanel fit_panel;
    try {
      fit_panel = slice_year(full_panel, year - 1);
    } catch (const NoDataForYearError&) {
      throw InsufficientHistoryError("year " + std::to_string(year) + " needs returns from " +
                                     std::to_string(year - 1) + " to fit the market graph");
    }
    const ReturnsPanel eval = slice_year(full_panel, year);
    if (!(fit_panel.dates.back() < eval.dates.front())) {
      throw ValidationError("fit window overlaps evaluation window for year " + std::to_string(year));
    }

    ExemplarFit fit = fit_exemplars(fit_panel, options.k, options.solver, options.qubo);
    const DatedSeries* index = options.index ? &*options.index : nullptr;
    TrackingReport report =
        evaluate_portfolio(eval, year, fit.exemplars, options.weighting, &fit.graph, index);
    results.push_back({std::move(report), std::move(fit)});
  }
  return results;
}

std::vector<TrackingReport> run_annual_backtest(const ReturnsPanel& full_panel,
                                                std::span<const int> years,
                                                const BacktestOptions& options) {
  std::vector<TrackingReport> reports;
  for (auto& r : run_annual_backtest_detailed(full_panel, years, options))
    reports.push_back(std::move(r.report));
  return reports;
}

void write_report_csv(std::span<const TrackingReport> reports, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "year,tracking_error,beta,intercept,t_stat,n_days,exemplars\n";
  for (const auto& r : reports) {
    out << r.year << ',' << csv::format_double(r.tracking_error) << ',' << csv::format_double(r.beta)
        << ',' << csv::format_double(r.intercept) << ',' << csv::format_double(r.t_stat) << ','
        << r.series.size() << ',' << csv::join(r.exemplars, ";") << '\n';
  }
}

void write_series_csv(const TrackingReport& report, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "date,r_index,r_port,diff\n";
  for (const auto& p : report.series) {
    out << p.date.iso() << ',' << csv::format_double(p.r_index) << ','
        << csv::format_double(p.r_port) << ',' << csv::format_double(p.r_index - p.r_port) << '\n';
  }
}

}  // namespace mgq
