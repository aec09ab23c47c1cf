#pragma once

#include <stdexcept>
#include <string>

namespace patchtrack {

// All library failures derive from Error so the CLI can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class InvalidStateError : public Error {
public:
    using Error::Error;
};

class ContractError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& file, int line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Non-finite arithmetic inside the tracking pipeline. `stage` names the
// pipeline step, `frame` the 1-based frame index (0 when unknown).
class NumericError : public Error {
public:
    NumericError(const std::string& stage, int frame, const std::string& what)
        : Error("numeric failure in " + stage + " at frame " + std::to_string(frame) + ": " + what),
          stage_(stage), frame_(frame) {}
    const std::string& stage() const { return stage_; }
    int frame() const { return frame_; }

private:
    std::string stage_;
    int frame_;
};

}  // namespace patchtrack
