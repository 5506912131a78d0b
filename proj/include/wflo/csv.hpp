#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace wflo {

/// Numeric CSV table with a mandatory header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;  // source line of each row, 1-based
};

/// Parses a numeric CSV. The header must equal `expected_header` exactly
/// (after trimming). Blank lines and lines starting with '#' are skipped.
/// Throws FormatError with the offending line number.
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

/// Shortest round-trip representation; locale independent.
std::string format_double(double v);

}  // namespace wflo
