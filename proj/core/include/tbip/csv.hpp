#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tbip::csv {

using Row = std::vector<std::string>;

// Minimal RFC 4180 reader: quoted fields may contain commas and doubled quotes.
Row parse_line(std::string_view line);
std::string format_row(const Row& row);

// Reads every non-empty line. A first row whose `numeric_column` does not
// parse as a number is treated as a header and skipped; pass -1 to keep all rows.
std::vector<Row> read_file(const std::filesystem::path& path, int numeric_column = -1);
void write_file(const std::filesystem::path& path, const Row& header,
                const std::vector<Row>& rows);

// Parses a CSV of `name,score` pairs.
struct NamedScores {
  std::vector<std::string> names;
  std::vector<double> scores;
};
NamedScores read_named_scores(const std::filesystem::path& path);
void write_named_scores(const std::filesystem::path& path, const NamedScores& scores);

std::string format_double(double value);

}  // namespace tbip::csv
