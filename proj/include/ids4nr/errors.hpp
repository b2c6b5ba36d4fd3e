#pragma once

#include <stdexcept>
#include <string>

namespace ids4nr {

// All library errors derive from Error and carry a stable machine-parseable
// category string used by the CLI for its one-line error output.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category)) {}

    const std::string& category() const { return category_; }

private:
    std::string category_;
};

class MissingFileError : public Error {
public:
    explicit MissingFileError(const std::string& path)
        : Error("MissingFile", "file not found: " + path) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& path, long line, const std::string& what)
        : Error("ParseError",
                path + ":" + std::to_string(line) + ": " + what),
          line_(line) {}

    long line() const { return line_; }

private:
    long line_;
};

class EmptyAfterFilteringError : public Error {
public:
    explicit EmptyAfterFilteringError(int k_core)
        : Error("EmptyAfterFiltering",
                "k-core filtering with k=" + std::to_string(k_core) +
                    " removed every user and item") {}
};

class InsufficientCandidatesError : public Error {
public:
    InsufficientCandidatesError(int user, int wanted, int available)
        : Error("InsufficientCandidates",
                "user " + std::to_string(user) + " has only " +
                    std::to_string(available) + " negative candidates, " +
                    std::to_string(wanted) + " requested") {}
};

class ColdItemWithoutAttributesError : public Error {
public:
    explicit ColdItemWithoutAttributesError(int item)
        : Error("ColdItemWithoutAttributes",
                "cold item " + std::to_string(item) +
                    " has no attributes to impute from") {}
};

class DivergenceError : public Error {
public:
    DivergenceError(int epoch, long step)
        : Error("DivergenceError",
                "loss became non-finite at epoch " + std::to_string(epoch) +
                    ", step " + std::to_string(step)) {}
};

class CorruptCheckpointError : public Error {
public:
    explicit CorruptCheckpointError(const std::string& what)
        : Error("CorruptCheckpoint", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what)
        : Error("ConfigError", what) {}
};

}  // namespace ids4nr
