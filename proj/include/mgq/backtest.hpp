#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgq/ingest.hpp"
#include "mgq/market_graph.hpp"
#include "mgq/qubo.hpp"
#include "mgq/solver.hpp"

namespace mgq {

enum class Weighting { equal, cluster_size };

Weighting parse_weighting(std::string_view text);
std::string_view to_string(Weighting weighting);

/// Portfolio weights for `exemplars`, in the order given. Cluster-size weights
/// assign each graph asset to its nearest exemplar under `graph->dist` (ties to
/// the exemplar with the lower graph index) and use the share of assets won.
std::vector<double> portfolio_weights(std::span<const std::string> exemplars, Weighting weighting,
                                      const MarketGraph* graph = nullptr);

/// Weighted average of the exemplars' log returns on every panel date.
DatedSeries portfolio_returns(const ReturnsPanel& panel, std::span<const std::string> exemplars,
                              Weighting weighting = Weighting::equal,
                              const MarketGraph* graph = nullptr);

/// Same, with exemplars given as a selection over `panel.assets`.
DatedSeries portfolio_returns(const ReturnsPanel& panel, const Selection& selection,
                              Weighting weighting = Weighting::equal,
                              const MarketGraph* graph = nullptr);

/// Equal-weighted mean of all constituents: the default index proxy.
DatedSeries index_returns(const ReturnsPanel& panel);

/// Restricts a supplied index series to `dates`; every date must be present.
DatedSeries align_index(const DatedSeries& supplied, std::span<const Date> dates);

/// Sample standard deviation of r_index - r_port.
double tracking_error(std::span<const double> r_index, std::span<const double> r_port);

struct Regression {
  double alpha = 0.0;
  double beta = 0.0;
  double se_beta = 0.0;
  /// beta / se_beta (H0: beta = 0). +-infinity when residuals vanish.
  double t_stat = 0.0;
  /// (beta - 1) / se_beta (H0: beta = 1). Same sentinel rule.
  double t_stat_beta_one = 0.0;
};

/// OLS of r_port on r_index with intercept.
Regression beta_regression(std::span<const double> r_index, std::span<const double> r_port);

struct SeriesPoint {
  Date date;
  double r_index = 0.0;
  double r_port = 0.0;
};

struct TrackingReport {
  int year = 0;
  std::vector<std::string> exemplars;
  double tracking_error = 0.0;
  double beta = 0.0;
  double intercept = 0.0;
  double t_stat = 0.0;
  double t_stat_beta_one = 0.0;
  std::vector<SeriesPoint> series;
};

/// Metrics of a fixed exemplar set over one evaluation panel.
TrackingReport evaluate_portfolio(const ReturnsPanel& eval, int year,
                                  std::span<const std::string> exemplars, Weighting weighting,
                                  const MarketGraph* graph = nullptr,
                                  const DatedSeries* index = nullptr);

struct BacktestOptions {
  int k = 10;
  Weighting weighting = Weighting::equal;
  AnnealConfig solver;
  KMedoidOptions qubo;
  std::optional<DatedSeries> index;
};

/// Graph, QUBO and solution for one fit window.
struct ExemplarFit {
  MarketGraph graph;
  QuboProblem problem;
  SolveResult solve;
  std::vector<std::string> exemplars;
};

ExemplarFit fit_exemplars(const ReturnsPanel& fit_panel, int k, const AnnealConfig& solver,
                          const KMedoidOptions& qubo = {});

struct YearResult {
  TrackingReport report;
  ExemplarFit fit;
};

/// For each year: fit on the previous calendar year, evaluate on the year itself.
std::vector<YearResult> run_annual_backtest_detailed(const ReturnsPanel& full_panel,
                                                     std::span<const int> years,
                                                     const BacktestOptions& options);

std::vector<TrackingReport> run_annual_backtest(const ReturnsPanel& full_panel,
                                                std::span<const int> years,
                                                const BacktestOptions& options);

/// `year,tracking_error,beta,intercept,t_stat,n_days,exemplars` (exemplars ';'-joined).
void write_report_csv(std::span<const TrackingReport> reports, const std::filesystem::path& path);

/// `date,r_index,r_port,diff`.
void write_series_csv(const TrackingReport& report, const std::filesystem::path& path);

}  // namespace mgq
