#pragma once

#include <stdexcept>
#include <string>

namespace gcrl {

/// Raised when a caller breaks an operation's precondition (bad shape, bad index, ...).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyBufferError : public std::runtime_error {
 public:
  EmptyBufferError() : std::runtime_error("replay buffer is empty") {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace gcrl
