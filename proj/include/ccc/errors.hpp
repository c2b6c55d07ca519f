#pragma once

#include <stdexcept>
#include <string>

namespace ccc {

// Base class for all library errors. Subclasses map 1:1 onto the C API
// status codes, so every throw site picks the class by failure kind, not
// by message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an API precondition (bad action index, skipped observe,
// stepping a terminal state, invalid agent parameters).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: unknown key, unparsable value, or a value set
// that fails cross-field validation (e.g. a payoff table that is not a
// social dilemma).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem and serialization failures, including corrupt checkpoints.
class IoError : public Error {
 public:
  using Error::Error;
};

// Training left the numerically trusted region (runaway logits).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Requested feature does not exist for this environment (e.g. an
// intention-based agent on a partially observed game).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccc
