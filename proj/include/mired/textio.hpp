#pragma once

// Small text helpers shared by the CSV, config and checkpoint readers.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mired::text {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
/// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_csv_record(std::string_view line);
/// Quotes a CSV field only when it contains a separator, quote or newline.
std::string csv_field(std::string_view s);

/// Strict parse of a whole field; nullopt on anything but a finite number.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);
/// Fixed 17 significant digits.
std::string format_double17(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace mired::text
