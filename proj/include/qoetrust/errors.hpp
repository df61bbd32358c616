#pragma once

#include <stdexcept>
#include <string>

namespace qoetrust {

/// A value violated a domain invariant (rating out of range, bad weight).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration problem. `path` names the offending config location
/// (e.g. "attacks[2].params.target") when one is known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, std::string path = {})
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qoetrust
