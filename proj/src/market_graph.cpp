#include "mgq/market_graph.hpp"

#include <algorithm>
#include <fstream>

#include "mgq/csv.hpp"
#include "mgq/errors.hpp"

namespace mgq {
namespace {

constexpr double kRhoTolerance = 1e-9;

void require_square_symmetric(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(name) + " matrix is not square");
  if (!m.is_symmetric()) throw ValidationError(std::string(name) + " matrix is not symmetric");
}

}  // namespace

Matrix pearson_correlation(const ReturnsPanel& panel) {
  const std::size_t n = panel.num_assets();
  const std::size_t days = panel.num_dates();
  if (panel.returns.rows() != n || panel.returns.cols() != days) {
    throw DimensionError("returns matrix shape does not match assets x dates");
  }
  if (days < 2) throw InsufficientDataError("correlation needs at least 2 dates");

  // Centered series and their sums of squares.
  Matrix centered(n, days);
  std::vector<double> norm(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto r = panel.returns.row(a);
    if (std::all_of(r.begin(), r.end(), [&](double x) { return x == r.front(); })) {
      throw DegenerateSeriesError("asset " + panel.assets[a] + " has zero return variance");
    }
    double mean = 0.0;
    for (double x : r) mean += x;
    mean /= static_cast<double>(days);
    double ss = 0.0;
    for (std::size_t t = 0; t < days; ++t) {
      centered(a, t) = r[t] - mean;
      ss += centered(a, t) * centered(a, t);
    }
    if (!(ss > 0.0)) {
      throw DegenerateSeriesError("asset " + panel.assets[a] + " has zero return variance");
    }
    norm[a] = std::sqrt(ss);
  }

  // The (days - 1) factors of sample covariance and variances cancel.
  Matrix rho = Matrix::square(n);
  for (std::size_t i = 0; i < n; ++i) {
    rho(i, i) = 1.0;
    const auto xi = centered.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto xj = centered.row(j);
      double cross = 0.0;
      for (std::size_t t = 0; t < days; ++t) cross += xi[t] * xj[t];
      const double value = std::clamp(cross / (norm[i] * norm[j]), -1.0, 1.0);
      rho(i, j) = value;
      rho(j, i) = value;
    }
  }
  return rho;
}

Matrix distance_from_correlation(const Matrix& rho) {
  require_square_symmetric(rho, "correlation");
  const std::size_t n = rho.rows();
  Matrix dist = Matrix::square(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(rho(i, i) - 1.0) > kRhoTolerance) {
      throw ValidationError("correlation diagonal entry " + std::to_string(i) + " is not 1");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = rho(i, j);
      if (!(std::abs(r) <= 1.0 + kRhoTolerance)) {
        throw ValidationError("correlation " + csv::format_double(r) + " outside [-1, 1] at (" +
                              std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      const double d = std::min(correlation_distance(std::clamp(r, -1.0, 1.0)), 2.0);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

Matrix robust_delta(const Matrix& dist) {
  require_square_symmetric(dist, "distance");
  const std::size_t n = dist.rows();
  Matrix delta = Matrix::square(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (dist(i, i) != 0.0) {
      throw ValidationError("distance diagonal entry " + std::to_string(i) + " is not 0");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = dist(i, j);
      if (!(d >= 0.0)) {
        throw ValidationError("negative distance " + csv::format_double(d) + " at (" +
                              std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      const double v = robust_dissimilarity(d);
      delta(i, j) = v;
      delta(j, i) = v;
    }
  }
  return delta;
}

MarketGraph build_market_graph(const ReturnsPanel& panel) {
  MarketGraph g;
  g.assets = panel.assets;
  g.rho = pearson_correlation(panel);
  g.dist = distance_from_correlation(g.rho);
  g.delta = robust_delta(g.dist);
  g.fit_start = panel.dates.front();
  g.fit_end = panel.dates.back();
  return g;
}

void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& labels,
                      const Matrix& m) {
  if (m.rows() != labels.size() || m.cols() != labels.size()) {
    throw DimensionError("matrix shape does not match label count");
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "ticker";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << labels[i];
    for (std::size_t j = 0; j < labels.size(); ++j) out << ',' << csv::format_double(m(i, j));
    out << '\n';
  }
}

LabeledMatrix read_matrix_csv(const std::filesystem::path& path) {
  const auto rows = csv::read(path);
  if (rows.empty() || rows.front().fields.size() < 2) {
    throw MalformedInputError(path.string() + ": expected header 'ticker,<t1>,...'");
  }
  LabeledMatrix out;
  out.labels.assign(rows.front().fields.begin() + 1, rows.front().fields.end());
  const std::size_t n = out.labels.size();
  if (rows.size() != n + 1) {
    throw MalformedInputError(path.string() + ": expected " + std::to_string(n) +
                              " data rows, got " + std::to_string(rows.size() - 1));
  }
  out.values = Matrix::square(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = rows[i + 1];
    const auto where = path.string() + ":" + std::to_string(row.line);
    if (row.fields.size() != n + 1) throw MalformedInputError(where + ": wrong number of fields");
    if (row.fields[0] != out.labels[i]) {
      throw MalformedInputError(where + ": row label " + row.fields[0] +
                                " does not match column " + out.labels[i]);
    }
    for (std::size_t j = 0; j < n; ++j) out.values(i, j) = csv::parse_double(row.fields[j + 1], where);
  }
  return out;
}

}  // namespace mgq
