#pragma once

#include <stdexcept>
#include <string>

namespace erank {

// Bad user input: malformed files, out-of-range scores, inconsistent configs.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-system level failures (missing file, unreadable, write error).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Sampler blew up (non-finite intermediate, dimension mismatch).
class McmcError : public std::runtime_error {
public:
    explicit McmcError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace erank
