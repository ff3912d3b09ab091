#pragma once

#include <stdexcept>
#include <string>

namespace fqs {

/// Broad error categories. The CLI maps Usage and Config to exit code 2 and
/// everything else to exit code 1.
enum class ErrorKind {
    Usage,
    Config,
    Parse,
    Data,
    Numeric,
    Format,
    Version,
    Io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace fqs
