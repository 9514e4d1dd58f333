#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mgq::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

/// Reads a comma-separated file. Blank lines are skipped, fields are trimmed.
/// Quoting is not supported; none of our formats need it.
std::vector<Row> read(const std::filesystem::path& path);

std::vector<std::string> split(std::string_view line);

/// Parses a decimal number; throws MalformedInputError citing `where`.
double parse_double(std::string_view text, std::string_view where);

/// Shortest text that round-trips to the same double.
std::string format_double(double value);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace mgq::csv
