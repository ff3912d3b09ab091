#include "fqs_cli/files.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

#include "fqs/error.hpp"

namespace fqs::cli {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
        fail(ErrorKind::Usage, fmt::format("input file '{}' does not exist", path.string()));
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::Usage, fmt::format("cannot open '{}'", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_files_atomic(const std::vector<std::pair<fs::path, std::string>>& files) {
    std::vector<std::pair<fs::path, fs::path>> staged;
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& [tmp, dst] : staged) {
            fs::remove(tmp, ec);
        }
    };
    for (const auto& [path, content] : files) {
        std::error_code ec;
        if (path.has_parent_path()) {
            fs::create_directories(path.parent_path(), ec);
            if (ec) {
                cleanup();
                fail(ErrorKind::Usage, fmt::format("cannot create output directory '{}': {}",
                                                   path.parent_path().string(), ec.message()));
            }
        }
        fs::path tmp = path;
        tmp += fmt::format(".tmp.{}", ::getpid());
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            cleanup();
            fail(ErrorKind::Usage, fmt::format("cannot write '{}'", path.string()));
        }
        staged.emplace_back(tmp, path);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.close();
        if (!out) {
            cleanup();
            fail(ErrorKind::Io, fmt::format("failed writing '{}'", path.string()));
        }
    }
    for (const auto& [tmp, dst] : staged) {
        std::error_code ec;
        fs::rename(tmp, dst, ec);
        if (ec) {
            cleanup();
            fail(ErrorKind::Io, fmt::format("cannot move '{}' into place: {}", dst.string(), ec.message()));
        }
    }
}

}  // namespace fqs::cli
