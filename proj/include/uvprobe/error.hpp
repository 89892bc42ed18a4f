#pragma once
// Exception types thrown by the probing engine. Every error derives from
// uvprobe::Error so callers can catch the whole family at once.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uvprobe {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed CoNLL-U input. line is 1-based, 0 when not tied to a line.
struct ParseError : Error {
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
    std::size_t line;
};

struct EmptyDatasetError : Error {
    using Error::Error;
};

// Bad or inconsistent EMBS container.
struct FormatError : Error {
    using Error::Error;
};

struct JoinError : Error {
    using Error::Error;
};

// Non-finite values during probe evaluation.
struct NumericError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    TrainingError(const std::string& what, std::string trace)
        : Error(what), epoch_trace(std::move(trace)) {}
    std::string epoch_trace;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace uvprobe
