#pragma once

#include <stdexcept>
#include <string>

namespace fogperc {

/// Invalid configuration value. `field()` names the offending key as
/// `section.key` so callers can report it verbatim.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An exhaustive oracle was asked to enumerate an instance above its cap.
class OracleTooLargeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Operation called before its inputs exist (empty replay, no cached forward).
class NotReadyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fogperc
