#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace causalcal {

// Shortest decimal that round-trips to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

std::vector<std::string_view> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
// Write to a temp file in the same directory, then rename. A path either
// holds complete content or does not exist; checkpoint resume relies on this.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace causalcal
