#include "tbip/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "tbip/error.hpp"

namespace tbip::csv {

namespace {

bool parses_as_number(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

}  // namespace

Row parse_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  Row row;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  row.push_back(std::move(field));
  return row;
}

std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    const auto& f = row[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out += f;
    } else {
      out.push_back('"');
      for (char c : f) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
      }
      out.push_back('"');
    }
  }
  return out;
}

std::vector<Row> read_file(const std::filesystem::path& path, int numeric_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<Row> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    Row row = parse_line(line);
    if (first && numeric_column >= 0) {
      first = false;
      const auto col = static_cast<std::size_t>(numeric_column);
      if (col >= row.size() || !parses_as_number(row[col])) continue;
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_file(const std::filesystem::path& path, const Row& header,
                const std::vector<Row>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (!header.empty()) out << format_row(header) << '\n';
  for (const auto& r : rows) out << format_row(r) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

NamedScores read_named_scores(const std::filesystem::path& path) {
  NamedScores out;
  for (const auto& row : read_file(path, 1)) {
    if (row.size() < 2) throw IoError("expected name,score rows in " + path.string());
    double v = 0.0;
    const auto& s = row[1];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw IoError("bad score '" + s + "' in " + path.string());
    }
    out.names.push_back(row[0]);
    out.scores.push_back(v);
  }
  return out;
}

void write_named_scores(const std::filesystem::path& path, const NamedScores& scores) {
  std::vector<Row> rows;
  for (std::size_t i = 0; i < scores.names.size(); ++i) {
    rows.push_back({scores.names[i], format_double(scores.scores[i])});
  }
  write_file(path, {"name", "score"}, rows);
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace tbip::csv
