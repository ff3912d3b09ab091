#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fqs::cli {

/// Reads a whole file. A missing file is a usage error.
std::string read_file(const std::filesystem::path& path);

/// Writes a set of files so that each appears complete or not at all: all
/// contents are staged to temporary siblings first, then renamed into place.
void write_files_atomic(const std::vector<std::pair<std::filesystem::path, std::string>>& files);

}  // namespace fqs::cli
