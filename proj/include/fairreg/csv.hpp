#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fairreg {

/// Header plus string cells; the shared dialect is comma separated, UTF-8,
/// '.' decimals, optional RFC 4180 quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index or -1.
  long column(std::string_view name) const;
};

/// Throws schema on a missing header or ragged rows, empty_dataset when there
/// are no data rows.
CsvTable parse_csv_table(std::string_view text);

/// Quotes a field only when it contains a delimiter, quote, or newline.
std::string csv_field(std::string_view value);

/// Strict double parse of a full cell; false on junk or trailing text.
bool parse_number(std::string_view cell, double& out);

}  // namespace fairreg
