#ifndef ELR_SRC_IO_UTIL_H_
#define ELR_SRC_IO_UTIL_H_

#include <string>
#include <string_view>
#include <vector>

namespace elr::internal {

std::string read_file(const std::string &path);
// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::string &path, std::string_view content);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_field(std::string_view field);
// Splits on '\n', dropping a trailing '\r' per line.
std::vector<std::string> split_lines(std::string_view text);

std::string lowercase(std::string_view s);

}  // namespace elr::internal

#endif  // ELR_SRC_IO_UTIL_H_
