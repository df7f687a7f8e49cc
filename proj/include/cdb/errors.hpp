#pragma once

#include <stdexcept>
#include <string>

namespace cdb {

// Error taxonomy used across the toolkit. The CLI maps these onto distinct
// exit codes: config -> 2, data (format/consistency/capacity) -> 3,
// everything else thrown at runtime -> 4.

// Invalid or inconsistent configuration (bad key, missing weights, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file (bad magic number, ragged CSV row, ...).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Paired inputs disagree (image/label count mismatch, ...).
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

// A source dataset cannot supply the requested number of samples.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric argument is outside its documented domain.
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training aborted (non-finite loss, ...).
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cdb
