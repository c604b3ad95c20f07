#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vthg {

// Broad failure class; the CLI maps each onto a distinct exit code.
enum class ErrorKind {
    config,    // bad flags, config file, unresolvable paths
    input,     // malformed or invalid input data
    pipeline,  // a processing stage failed on otherwise valid input
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Text-format error at a 1-based line (0 when not line-oriented).
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Domain invariant violation on an indexed element.
class ValidationError : public Error {
public:
    enum class Reason {
        malformed,
        non_finite,
        negative_time,
        empty_interval,
        unsorted,
        overlap,
        out_of_range,
    };

    ValidationError(Reason reason, std::size_t index, const std::string& message);
    Reason reason() const noexcept { return reason_; }
    std::size_t index() const noexcept { return index_; }

private:
    Reason reason_;
    std::size_t index_;
};

const char* to_string(ValidationError::Reason reason) noexcept;

class OovError : public Error {
public:
    explicit OovError(std::string word);
    const std::string& word() const noexcept { return word_; }

private:
    std::string word_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message);
};

class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& message);
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace vthg
