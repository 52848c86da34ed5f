#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace likspec::io {

std::string read_file(const std::filesystem::path& path);

// Writes atomically enough for our purposes: truncate then write. Throws
// Error(kIo) if the file cannot be opened or written.
void write_file(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string> split_lines(std::string_view text);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// Finite values only; throws Error(kParse) otherwise.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

// Splits one CSV record on commas. Fields never contain commas or quotes in
// the formats this project writes; doc ids containing either are rejected on
// export.
std::vector<std::string> split_csv(std::string_view line);

void check_csv_field(std::string_view field);

}  // namespace likspec::io
