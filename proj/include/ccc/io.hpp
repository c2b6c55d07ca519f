#pragma once

#include <string>

namespace ccc::io {

// Shortest text form that round-trips an IEEE double exactly.
std::string g17(double v);

void write_text_file(const std::string& path, const std::string& content);  // IoError
std::string read_text_file(const std::string& path);                        // IoError

}  // namespace ccc::io
