#pragma once

#include <stdexcept>
#include <string>

namespace dycent {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Vector lengths or shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An operation that needs a non-zero gradient (direction) received a zero vector.
class ZeroGradientError : public Error {
public:
    using Error::Error;
};

/// A request that the receiving object does not support (e.g. set_batch on an analytic surface).
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameters, unknown names, malformed config files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File-system failures; the message always carries the offending path.
class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace dycent
