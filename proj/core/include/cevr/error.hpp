#pragma once

#include <stdexcept>
#include <string>

namespace cevr {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    FileNotFound,
    UnsupportedFormat,
    IoFailure,
    ParseError,
    PaddingRequired,
    RankDeficient,
    MissingModel,
    ConfigMismatch,
};

const char* to_string(ErrorKind kind);

// Single exception type for the toolkit; the kind lets callers (notably the
// CLI) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace cevr
