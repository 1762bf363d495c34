#pragma once

#include <string>

namespace tp {

// Writes via a temporary file in the same directory, then renames over the target.
void write_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
// 12 significant digits, '.' decimal, "inf"/"-inf"/"nan" for non-finite values.
std::string fmt12(double x);

}  // namespace tp
