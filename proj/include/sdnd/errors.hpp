#pragma once
#include <stdexcept>
#include <string>

namespace sdnd {

// Base class for all library errors. Subclasses mirror the failure
// categories surfaced by the CLI (exit code 1) and the test suite.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public Error {
  public:
    using Error::Error;
};

class UnsupportedError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class ShapeError : public Error {
  public:
    using Error::Error;
};

class InvalidSchemeError : public Error {
  public:
    using Error::Error;
};

class SingularSchemeError : public Error {
  public:
    using Error::Error;
};

class InsufficientCandidatesError : public Error {
  public:
    InsufficientCandidatesError(const std::string& msg, int n_candidates)
        : Error(msg), n_candidates(n_candidates) {}
    int n_candidates;
};

class InvalidSignalError : public Error {
  public:
    using Error::Error;
};

class InvalidPlanError : public Error {
  public:
    using Error::Error;
};

class InvalidInputError : public Error {
  public:
    using Error::Error;
};

class DegenerateInputError : public Error {
  public:
    using Error::Error;
};

class WindowError : public Error {
  public:
    using Error::Error;
};

class DivergenceError : public Error {
  public:
    using Error::Error;
};

// Raised by pipeline stages so the CLI can report which stage failed.
class StageError : public Error {
  public:
    StageError(const std::string& stage, const std::string& msg)
        : Error("stage " + stage + ": " + msg), stage(stage) {}
    std::string stage;
};

} // namespace sdnd
