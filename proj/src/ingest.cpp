#include "mgq/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

#include "mgq/csv.hpp"
#include "mgq/errors.hpp"

namespace mgq {
namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string at_line(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

Date parse_date(std::string_view text, const std::string& where) {
  try {
    return Date::parse(text);
  } catch (const MalformedInputError& e) {
    throw MalformedInputError(where + ": " + e.what());
  }
}

double checked_price(double value, const std::string& asset, const Date& date) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw PriceValidationError("non-positive price " + csv::format_double(value) + " for " +
                               asset + " on " + date.iso());
  }
  return value;
}

PricePanel load_long(const std::vector<csv::Row>& rows, const std::filesystem::path& path) {
  std::vector<std::string> assets;
  std::unordered_map<std::string, std::size_t> asset_index;
  std::map<Date, std::map<std::size_t, double>> quotes;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto where = at_line(path, row.line);
    if (row.fields.size() != 3) throw MalformedInputError(where + ": expected 3 fields");
    const Date date = parse_date(row.fields[0], where);
    const std::string& ticker = row.fields[1];
    if (ticker.empty()) throw MalformedInputError(where + ": empty ticker");
    const double close = csv::parse_double(row.fields[2], where);
    auto [it, inserted] = asset_index.try_emplace(ticker, assets.size());
    if (inserted) assets.push_back(ticker);
    if (!quotes[date].emplace(it->second, checked_price(close, ticker, date)).second) {
      throw MalformedInputError(where + ": duplicate quote for " + ticker + " on " + date.iso());
    }
  }

  PricePanel panel;
  panel.assets = std::move(assets);
  panel.prices = Matrix(panel.assets.size(), quotes.size(), kMissing);
  std::size_t t = 0;
  for (const auto& [date, by_asset] : quotes) {
    panel.dates.push_back(date);
    for (const auto& [asset, close] : by_asset) panel.prices(asset, t) = close;
    ++t;
  }
  return panel;
}

PricePanel load_wide(const std::vector<csv::Row>& rows, const std::filesystem::path& path) {
  const auto& header = rows.front();
  PricePanel panel;
  panel.assets.assign(header.fields.begin() + 1, header.fields.end());
  std::set<std::string> seen;
  for (const auto& a : panel.assets) {
    if (a.empty()) throw MalformedInputError(at_line(path, header.line) + ": empty ticker column");
    if (!seen.insert(a).second) {
      throw MalformedInputError(at_line(path, header.line) + ": duplicate ticker column " + a);
    }
  }

  std::map<Date, std::vector<double>> by_date;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto where = at_line(path, row.line);
    if (row.fields.size() != header.fields.size()) {
      throw MalformedInputError(where + ": expected " + std::to_string(header.fields.size()) +
                                " fields, got " + std::to_string(row.fields.size()));
    }
    const Date date = parse_date(row.fields[0], where);
    std::vector<double> closes(panel.assets.size(), kMissing);
    for (std::size_t a = 0; a < panel.assets.size(); ++a) {
      const auto& cell = row.fields[a + 1];
      if (cell.empty()) continue;
      closes[a] = checked_price(csv::parse_double(cell, where), panel.assets[a], date);
    }
    if (!by_date.emplace(date, std::move(closes)).second) {
      throw MalformedInputError(where + ": duplicate date " + date.iso());
    }
  }

  panel.prices = Matrix(panel.assets.size(), by_date.size(), kMissing);
  std::size_t t = 0;
  for (const auto& [date, closes] : by_date) {
    panel.dates.push_back(date);
    for (std::size_t a = 0; a < closes.size(); ++a) panel.prices(a, t) = closes[a];
    ++t;
  }
  return panel;
}

// Keeps the listed assets/dates of a price panel.
PricePanel subset(const PricePanel& p, const std::vector<std::size_t>& assets,
                  const std::vector<std::size_t>& dates) {
  PricePanel out;
  out.prices = Matrix(assets.size(), dates.size());
  for (std::size_t i = 0; i < assets.size(); ++i) {
    out.assets.push_back(p.assets[assets[i]]);
    for (std::size_t t = 0; t < dates.size(); ++t) out.prices(i, t) = p.prices(assets[i], dates[t]);
  }
  for (auto t : dates) out.dates.push_back(p.dates[t]);
  return out;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Dates on which every asset has a quote.
std::vector<std::size_t> fully_quoted_dates(const PricePanel& p) {
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < p.dates.size(); ++t) {
    bool all = true;
    for (std::size_t a = 0; a < p.assets.size() && all; ++a) all = p.has(a, t);
    if (all) keep.push_back(t);
  }
  return keep;
}

}  // namespace

bool PricePanel::has(std::size_t asset, std::size_t date) const {
  return !std::isnan(prices(asset, date));
}

void PricePanel::validate() const {
  if (prices.rows() != assets.size() || prices.cols() != dates.size()) {
    throw DimensionError("price matrix shape does not match assets x dates");
  }
  std::set<std::string> seen;
  for (const auto& a : assets)
    if (!seen.insert(a).second) throw PriceValidationError("duplicate asset id " + a);
  for (std::size_t t = 1; t < dates.size(); ++t)
    if (!(dates[t - 1] < dates[t])) throw PriceValidationError("dates not strictly increasing");
  for (std::size_t a = 0; a < assets.size(); ++a)
    for (std::size_t t = 0; t < dates.size(); ++t)
      if (has(a, t)) checked_price(prices(a, t), assets[a], dates[t]);
}

std::optional<std::size_t> ReturnsPanel::index_of(std::string_view ticker) const {
  const auto it = std::find(assets.begin(), assets.end(), ticker);
  if (it == assets.end()) return std::nullopt;
  return static_cast<std::size_t>(it - assets.begin());
}

std::vector<double> ReturnsPanel::series(std::size_t asset) const {
  const auto row = returns.row(asset);
  return {row.begin(), row.end()};
}

MissingPolicy parse_missing_policy(std::string_view text) {
  if (text == "drop-asset") return MissingPolicy::drop_asset;
  if (text == "forward-fill") return MissingPolicy::forward_fill;
  if (text == "drop-date") return MissingPolicy::drop_date;
  throw ParameterError("unknown missing-data policy '" + std::string(text) +
                       "' (expected drop-asset, forward-fill or drop-date)");
}

std::string_view to_string(MissingPolicy policy) {
  switch (policy) {
    case MissingPolicy::drop_asset: return "drop-asset";
    case MissingPolicy::forward_fill: return "forward-fill";
    case MissingPolicy::drop_date: return "drop-date";
  }
  return "?";
}

PricePanel load_prices(const std::filesystem::path& path) {
  const auto rows = csv::read(path);
  if (rows.empty()) throw MalformedInputError(path.string() + ": empty file");
  const auto& header = rows.front().fields;
  if (header.empty() || lower(header[0]) != "date") {
    throw MalformedInputError(at_line(path, rows.front().line) + ": header must start with 'date'");
  }
  const bool is_long = header.size() == 3 && lower(header[1]) == "ticker" &&
                       lower(header[2]) == "close";
  if (!is_long && header.size() < 2) {
    throw MalformedInputError(at_line(path, rows.front().line) + ": no ticker columns");
  }
  PricePanel panel = is_long ? load_long(rows, path) : load_wide(rows, path);
  panel.validate();
  return panel;
}

ReturnsPanel compute_log_returns(const PricePanel& panel, MissingPolicy policy) {
  PricePanel aligned;
  switch (policy) {
    case MissingPolicy::drop_asset: {
      std::vector<std::size_t> keep;
      for (std::size_t a = 0; a < panel.assets.size(); ++a) {
        bool complete = true;
        for (std::size_t t = 0; t < panel.dates.size() && complete; ++t) complete = panel.has(a, t);
        if (complete) keep.push_back(a);
      }
      aligned = subset(panel, keep, iota(panel.dates.size()));
      break;
    }
    case MissingPolicy::forward_fill: {
      PricePanel filled = panel;
      for (std::size_t a = 0; a < filled.assets.size(); ++a)
        for (std::size_t t = 1; t < filled.dates.size(); ++t)
          if (!filled.has(a, t)) filled.prices(a, t) = filled.prices(a, t - 1);
      // Leading holes cannot be filled; align on the remaining common dates.
      aligned = subset(filled, iota(filled.assets.size()), fully_quoted_dates(filled));
      break;
    }
    case MissingPolicy::drop_date:
      aligned = subset(panel, iota(panel.assets.size()), fully_quoted_dates(panel));
      break;
  }

  if (aligned.assets.empty()) {
    throw InsufficientDataError("no asset survives the '" + std::string(to_string(policy)) +
                                "' missing-data policy");
  }
  if (aligned.dates.size() < 2) {
    throw InsufficientDataError("asset " + aligned.assets.front() + " has fewer than 2 prices after '" +
                                std::string(to_string(policy)) + "' policy");
  }

  ReturnsPanel out;
  out.assets = aligned.assets;
  out.dates.assign(aligned.dates.begin() + 1, aligned.dates.end());
  out.returns = Matrix(out.assets.size(), out.dates.size());
  for (std::size_t a = 0; a < out.assets.size(); ++a)
    for (std::size_t t = 0; t < out.dates.size(); ++t)
      out.returns(a, t) = std::log(aligned.prices(a, t + 1) / aligned.prices(a, t));
  return out;
}

ReturnsPanel slice_year(const ReturnsPanel& panel, int year) {
  std::vector<std::size_t> keep;
  for (std::size_t t = 0; t < panel.dates.size(); ++t)
    if (panel.dates[t].year == year) keep.push_back(t);
  if (keep.empty()) throw NoDataForYearError("no data for year " + std::to_string(year));

  ReturnsPanel out;
  out.assets = panel.assets;
  out.returns = Matrix(panel.assets.size(), keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.dates.push_back(panel.dates[keep[j]]);
    for (std::size_t a = 0; a < panel.assets.size(); ++a) out.returns(a, j) = panel.returns(a, keep[j]);
  }
  return out;
}

ReturnsPanel load_returns(const std::filesystem::path& path) {
  const PricePanel raw = [&] {
    const auto rows = csv::read(path);
    if (rows.empty() || rows.front().fields.size() < 2 || lower(rows.front().fields[0]) != "date") {
      throw MalformedInputError(path.string() + ": expected header 'date,<ticker>,...'");
    }
    // Reuse the wide reader's structure checks, without the price sign check.
    PricePanel p;
    const auto& header = rows.front();
    p.assets.assign(header.fields.begin() + 1, header.fields.end());
    p.prices = Matrix(p.assets.size(), rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto where = at_line(path, rows[r].line);
      if (rows[r].fields.size() != header.fields.size())
        throw MalformedInputError(where + ": wrong number of fields");
      const Date d = parse_date(rows[r].fields[0], where);
      if (!p.dates.empty() && !(p.dates.back() < d))
        throw MalformedInputError(where + ": dates must be strictly increasing");
      p.dates.push_back(d);
      for (std::size_t a = 0; a < p.assets.size(); ++a)
        p.prices(a, r - 1) = csv::parse_double(rows[r].fields[a + 1], where);
    }
    return p;
  }();
  return ReturnsPanel{raw.assets, raw.dates, raw.prices};
}

void write_returns(const ReturnsPanel& panel, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "date";
  for (const auto& a : panel.assets) out << ',' << a;
  out << '\n';
  for (std::size_t t = 0; t < panel.dates.size(); ++t) {
    out << panel.dates[t].iso();
    for (std::size_t a = 0; a < panel.assets.size(); ++a)
      out << ',' << csv::format_double(panel.returns(a, t));
    out << '\n';
  }
}

DatedSeries load_index_returns(const std::filesystem::path& path) {
  const auto rows = csv::read(path);
  if (rows.empty() || rows.front().fields.size() != 2 || lower(rows.front().fields[0]) != "date" ||
      lower(rows.front().fields[1]) != "return") {
    throw MalformedInputError(path.string() + ": expected header 'date,return'");
  }
  DatedSeries s;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto where = at_line(path, rows[r].line);
    if (rows[r].fields.size() != 2) throw MalformedInputError(where + ": expected 2 fields");
    const Date d = parse_date(rows[r].fields[0], where);
    if (!s.dates.empty() && !(s.dates.back() < d))
      throw MalformedInputError(where + ": dates must be strictly increasing");
    s.dates.push_back(d);
    s.values.push_back(csv::parse_double(rows[r].fields[1], where));
  }
  return s;
}

}  // namespace mgq
