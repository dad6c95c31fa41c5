#pragma once

#include <stdexcept>
#include <string>

namespace zpt {

// Caller broke a documented precondition (shape, dimension, length).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid configuration or spec values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk data; the message names the file and line/record.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero-norm rows and similar inputs outside the domain of a numeric routine.
class NumericalDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Non-finite loss during optimisation.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Object used before it reached the required lifecycle state.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace zpt
