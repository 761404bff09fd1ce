#pragma once

#include <string>

namespace curv2d {

/// Formats a double with 17 significant digits (bit-faithful round trips).
std::string fmt_g17(double x);

/// Writes a file atomically (temp file in the same directory + rename).
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace curv2d
