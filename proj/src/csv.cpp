#include "wflo/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "wflo/errors.hpp"

namespace wflo {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path);
  if (!in) throw FormatError(fmt::format("{}: cannot open file", path.string()));

  CsvTable table;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto cells = split(t);
    if (!have_header) {
      if (cells != expected_header) {
        throw FormatError(fmt::format("{}:{}: expected header '{}'", path.string(), line_no,
                                      fmt::join(expected_header, ",")));
      }
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != expected_header.size()) {
      throw FormatError(fmt::format("{}:{}: expected {} columns, found {}", path.string(), line_no,
                                    expected_header.size(), cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc{} || ptr != c.data() + c.size()) {
        throw FormatError(fmt::format("{}:{}: '{}' is not a number", path.string(), line_no, c));
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw FormatError(fmt::format("{}: missing header", path.string()));
  return table;
}

std::string format_double(double v) { return fmt::format("{}", v); }

}  // namespace wflo
