#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace iprar {

/// Base error for everything the engine raises. `category()` is a stable
/// machine-parseable tag the CLI prints as `error: <category>: <message>`.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

/// Bad arguments to an operation (k = 0, dimension mismatch, empty inputs...).
class InvalidArgumentError : public Error {
public:
    explicit InvalidArgumentError(const std::string& msg) : Error("invalid_argument", msg) {}
};

/// Provider-side failures: no backend for a role, transport failure after
/// retries, or an unmatched request in mock mode.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& msg) : Error("provider", msg) {}
};

/// A provider reply that could not be parsed into the expected shape after
/// the one reformat retry.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error("parse", msg) {}
};

/// A prerequisite artifact (corpus, index, graph) is missing. CLI exit code 2.
class MissingArtifactError : public Error {
public:
    explicit MissingArtifactError(const std::string& msg) : Error("missing_artifact", msg) {}
};

}  // namespace iprar
