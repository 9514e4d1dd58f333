#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mgq/date.hpp"
#include "mgq/matrix.hpp"

namespace mgq {

/// Close prices, asset x date. Missing quotes are NaN.
struct PricePanel {
  std::vector<std::string> assets;
  std::vector<Date> dates;
  Matrix prices;

  bool has(std::size_t asset, std::size_t date) const;
  /// Throws if any invariant (unique assets, increasing dates, positive prices) fails.
  void validate() const;
};

/// Daily log returns, asset x date, hole-free. dates[t] labels the return
/// from the previous quote up to dates[t].
struct ReturnsPanel {
  std::vector<std::string> assets;
  std::vector<Date> dates;
  Matrix returns;

  std::size_t num_assets() const noexcept { return assets.size(); }
  std::size_t num_dates() const noexcept { return dates.size(); }
  std::optional<std::size_t> index_of(std::string_view ticker) const;
  std::vector<double> series(std::size_t asset) const;
};

enum class MissingPolicy { drop_asset, forward_fill, drop_date };

MissingPolicy parse_missing_policy(std::string_view text);
std::string_view to_string(MissingPolicy policy);

/// Loads long (`date,ticker,close`) or wide (`date,<t1>,<t2>,...`) price CSV.
PricePanel load_prices(const std::filesystem::path& path);

/// Applies `policy` to the holes, aligns dates, and differences log prices.
ReturnsPanel compute_log_returns(const PricePanel& panel,
                                 MissingPolicy policy = MissingPolicy::drop_asset);

/// Restricts to dates whose calendar year equals `year`.
ReturnsPanel slice_year(const ReturnsPanel& panel, int year);

/// Reads/writes returns in wide CSV layout (`date,<t1>,...`), used between CLI stages.
ReturnsPanel load_returns(const std::filesystem::path& path);
void write_returns(const ReturnsPanel& panel, const std::filesystem::path& path);

/// A dated scalar series (e.g. an externally supplied index return series).
struct DatedSeries {
  std::vector<Date> dates;
  std::vector<double> values;
};

/// Reads `date,return` CSV.
DatedSeries load_index_returns(const std::filesystem::path& path);

}  // namespace mgq
