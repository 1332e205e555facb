#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phpguard {

/// Error raised for contract violations the caller is expected to report
/// (bad input files, malformed configuration, unreachable hosts).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Splits on `sep`, trimming each piece; empty pieces are dropped.
std::vector<std::string> split_list(std::string_view s, char sep);

/// Splits text into lines, treating LF, CR and CRLF as terminators.
/// Terminators are not included. A trailing terminator does not produce an
/// extra empty line.
std::vector<std::string_view> split_lines(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

/// Replaces tabs, CR and LF with spaces so the value fits one TSV field.
std::string tsv_field(std::string_view s);

}  // namespace phpguard
