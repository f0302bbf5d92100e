#pragma once

#include <stdexcept>
#include <string>

namespace scaleguard {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller supplied an argument outside the operation's domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The scale spec leaves a detector or filter nothing to work with
/// (identity ratio, fully covered mask, empty scoring set).
class DegenerateSpec : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed on one record.
class StageError : public Error {
public:
    StageError(std::string stage, std::string record, const std::string& what)
        : Error("stage '" + stage + "' failed on record '" + record + "': " + what), stage_(std::move(stage)),
          record_(std::move(record))
    {
    }

    const std::string& stage() const { return stage_; }
    const std::string& record() const { return record_; }

private:
    std::string stage_;
    std::string record_;
};

} // namespace scaleguard
