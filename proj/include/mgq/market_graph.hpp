#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "mgq/date.hpp"
#include "mgq/ingest.hpp"
#include "mgq/matrix.hpp"

namespace mgq {

/// Complete weighted graph over a fit window. All three matrices are n x n,
/// symmetric, and indexed like `assets`.
struct MarketGraph {
  std::vector<std::string> assets;
  Matrix rho;    // Pearson correlation, unit diagonal
  Matrix dist;   // sqrt(2(1 - rho)), in [0, 2]
  Matrix delta;  // 1 - exp(-dist/2), in [0, 1 - 1/e]
  Date fit_start;
  Date fit_end;

  std::size_t size() const noexcept { return assets.size(); }
};

/// Correlation distance for a single coefficient; rho must already be in [-1, 1].
inline double correlation_distance(double rho) { return std::sqrt(2.0 * (1.0 - rho)); }

/// Bounded dissimilarity for a single distance.
inline double robust_dissimilarity(double dist) { return -std::expm1(-0.5 * dist); }

/// Sample Pearson correlation of every pair of asset return series.
Matrix pearson_correlation(const ReturnsPanel& panel);

Matrix distance_from_correlation(const Matrix& rho);

Matrix robust_delta(const Matrix& dist);

MarketGraph build_market_graph(const ReturnsPanel& panel);

/// Square matrix CSV with tickers as row and column headers (`ticker,<t1>,...`).
void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& labels,
                      const Matrix& m);

struct LabeledMatrix {
  std::vector<std::string> labels;
  Matrix values;
};

LabeledMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace mgq
