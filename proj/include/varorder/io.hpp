#pragma once

#include <filesystem>
#include <string>

namespace varorder {

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames, so readers never observe a
// partial file.
void write_text_file_atomic(const std::filesystem::path& path,
                            const std::string& content);

std::string fmt_double(double v);        // shortest round-trip (%.17g)
std::string fmt_double_short(double v);  // plotting precision (%.12g)

}  // namespace varorder
