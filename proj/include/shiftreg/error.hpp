#pragma once

#include <stdexcept>
#include <string>

namespace shiftreg {

enum class ErrorKind { io, parse, validation, numeric };

// Library-wide exception. The kind drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::io: return "io";
        case ErrorKind::parse: return "parse";
        case ErrorKind::validation: return "validation";
        case ErrorKind::numeric: return "numeric";
    }
    return "unknown";
}

}  // namespace shiftreg
