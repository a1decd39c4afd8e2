#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace figcap {

/// Throws IoError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Regular files in `dir` whose extension is one of `extensions` (with dot,
/// lowercase), sorted by name. Throws IoError when `dir` is not a directory.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir,
                                              const std::vector<std::string>& extensions);

}  // namespace figcap
