#pragma once

#include <string>

namespace scalelaw {

// Whole-file read; a missing or unreadable file is a ValidationError.
std::string read_file(const std::string& path);

// Writes to a sibling temporary file, then renames it over path.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace scalelaw
