#pragma once

#include <stdexcept>
#include <string>

namespace diachronic {

/// Thrown when an operation receives arguments outside its documented domain.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A player made a move that the hosting protocol does not allow.
class ProtocolViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// An object was used in a state that does not permit the operation
/// (for example settling a contract twice).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace diachronic
