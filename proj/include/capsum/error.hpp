#pragma once

#include <stdexcept>
#include <string>

namespace capsum {

// Bad thresholds, unknown config keys, odd embedding dims.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, records, dimensions).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Selector training produced a non-finite loss.
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, int epoch) : std::runtime_error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

// A post-condition the library guarantees was violated.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace capsum
