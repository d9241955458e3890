#pragma once

#include <stdexcept>
#include <string>

namespace competevo {

/// Bad or inconsistent run configuration (also thrown for out-of-range
/// hyperparameters such as delta outside [0,1] or T_t <= 0).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Vector length does not match the expected dimension.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite or otherwise unrepresentable input value.
class InvalidValueError : public std::invalid_argument {
 public:
  explicit InvalidValueError(const std::string& what) : std::invalid_argument(what) {}
};

/// Unknown species name.
class InvalidSpeciesError : public std::invalid_argument {
 public:
  explicit InvalidSpeciesError(const std::string& what) : std::invalid_argument(what) {}
};

/// Morph vector violates its bounds or finiteness contract.
class InvalidMorphError : public std::invalid_argument {
 public:
  explicit InvalidMorphError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite value produced inside a numeric kernel (forward/backward pass,
/// optimizer step). The message carries the parameter path when known.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Corrupt, partial, or incompatible checkpoint/pool file.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failure (open/read/write).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Referenced policy version does not exist.
class LookupError : public std::runtime_error {
 public:
  explicit LookupError(const std::string& what) : std::runtime_error(what) {}
};

/// Caller broke an API precondition (e.g. stepping a terminal state).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

}  // namespace competevo
