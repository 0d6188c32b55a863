#pragma once

#include <stdexcept>
#include <string>

namespace ccl {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// SCM sampling could not satisfy its constraints within the redraw budget.
class UnsatisfiableConfig : public Error {
public:
    using Error::Error;
};

/// Data generation failed (e.g. contemporaneous cycle).
class GenerationError : public Error {
public:
    using Error::Error;
};

/// No causal model is available to plan with (empty MAG enumeration).
class NoModelError : public Error {
public:
    using Error::Error;
};

/// Bad key or value in a configuration source. `key()` names the offender.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& what)
        : Error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Malformed input file (CSV / graph text).
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace ccl
