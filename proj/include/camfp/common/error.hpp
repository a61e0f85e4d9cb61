#pragma once

#include <stdexcept>
#include <string>

namespace camfp {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Array or image dimensions are inconsistent with what an operation needs.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A parameter is outside its legal range.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A file could not be decoded; the message names the format.
class DecodeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (non-finite features, bad labels, bad manifest rows).
class DataError : public Error {
public:
    using Error::Error;
};

/// A source image cannot supply the requested number of disjoint patches.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, long long max_feasible)
        : Error(what), max_feasible_(max_feasible) {}
    long long max_feasible() const { return max_feasible_; }

private:
    long long max_feasible_;
};

class SplitError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed; the message names the stage and where its artifacts are.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what) : Error(what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

}  // namespace camfp
