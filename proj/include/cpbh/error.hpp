#pragma once

#include <stdexcept>
#include <string>

namespace cpbh {

/// Raised when an argument violates an operation's precondition.
class DomainError : public std::domain_error {
public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Raised for unreadable or malformed input files.
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cpbh
