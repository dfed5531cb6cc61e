#pragma once

#include <stdexcept>
#include <string>

namespace ragcn {

// Error taxonomy used across the library. The CLI maps each category to a
// stable "error: <category>: <message>" line and a nonzero exit code.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const { return category_; }

private:
    std::string category_;
};

// Tensor shapes that cannot be combined (matmul inner extents, elementwise
// mismatch, ...). Messages always name both shapes.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& message) : Error("dimension", message) {}
};

// Invalid configuration: bad hyperparameter, malformed graph, incompatible
// checkpoint metadata.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config", message) {}
};

// Invalid runtime input: out-of-range label, empty batch.
class InputError : public Error {
public:
    explicit InputError(const std::string& message) : Error("input", message) {}
};

// API misuse: backward on a non-scalar, next_mask without predecessors.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error("usage", message) {}
};

// Malformed file contents. Carries file context in the message.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("parse", message) {}
};

// Filesystem failures: missing file, short read, failed write.
class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace ragcn
