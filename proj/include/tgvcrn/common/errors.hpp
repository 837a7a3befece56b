#pragma once

#include <stdexcept>
#include <string>

namespace tgvcrn {

// Violated precondition or malformed input. CLI exit code 1.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class DimensionError : public ContractError {
 public:
  using ContractError::ContractError;
};

class ConfigError : public ContractError {
 public:
  using ContractError::ContractError;
};

// NaN/Inf or an argument outside an operation's domain. CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tgvcrn
