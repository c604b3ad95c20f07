#include "vedicthg/error.hpp"

namespace vthg {

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorKind::input,
            line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

ValidationError::ValidationError(Reason reason, std::size_t index, const std::string& message)
    : Error(ErrorKind::input,
            std::string(to_string(reason)) + " at index " + std::to_string(index) + ": " + message),
      reason_(reason),
      index_(index) {}

const char* to_string(ValidationError::Reason reason) noexcept {
    switch (reason) {
        case ValidationError::Reason::malformed: return "malformed";
        case ValidationError::Reason::non_finite: return "non-finite";
        case ValidationError::Reason::negative_time: return "negative time";
        case ValidationError::Reason::empty_interval: return "start >= end";
        case ValidationError::Reason::unsorted: return "unsorted";
        case ValidationError::Reason::overlap: return "overlap";
        case ValidationError::Reason::out_of_range: return "out of range";
    }
    return "invalid";
}

OovError::OovError(std::string word)
    : Error(ErrorKind::input, "word not in lexicon: " + word), word_(std::move(word)) {}

ConfigError::ConfigError(const std::string& message) : Error(ErrorKind::config, message) {}

PipelineError::PipelineError(std::string stage, const std::string& message)
    : Error(ErrorKind::pipeline, stage + ": " + message), stage_(std::move(stage)) {}

}  // namespace vthg
