#pragma once

#include <stdexcept>
#include <string>

namespace rth {

// Error classes map onto CLI exit codes (see cli.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters, flags or configuration documents.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad input data: undecodable images, malformed manifests, empty datasets.
class DataError : public Error {
public:
    using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
public:
    using Error::Error;
};

// Model file failed validation on load.
class FormatError : public Error {
public:
    enum class Kind { BadMagic, UnsupportedVersion, Truncated, ChecksumMismatch, Malformed };

    FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace rth
