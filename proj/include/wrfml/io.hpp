#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace wrfml {

/// Whole file as bytes. Throws Io.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file, then renames over `path`. Creates parent
/// directories. Throws Io.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

} // namespace wrfml
