#pragma once

#include <stdexcept>
#include <string>

namespace prl {

/// Input violates a model or config invariant. `path()` names the offending
/// field, e.g. `kernels[2][0][1]`.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// An iterative solver hit its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_span)
        : std::runtime_error(what + " (last span " + std::to_string(last_span) + ")"),
          last_span_(last_span) {}

    double last_span() const noexcept { return last_span_; }

private:
    double last_span_;
};

/// Brute-force enumeration refused because the instance is too large.
class SizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace prl
