#pragma once

#include <string>
#include <vector>

namespace leadlag {

// Minimal CSV handling for the fixed, unquoted formats this project emits
// and consumes.
std::vector<std::string> split_csv_line(const std::string& line);

// Reads a whole file; returns false when the file cannot be opened.
bool read_file(const std::string& path, std::string& out);

void write_file(const std::string& path, const std::string& content);

// Deterministic float rendering shared by every CSV writer.
std::string format_double(double v);

// Full-precision variant for plot data files, where downstream refits must
// reproduce report statistics.
std::string format_double_exact(double v);

} // namespace leadlag
