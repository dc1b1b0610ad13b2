#pragma once

#include <stdexcept>
#include <string>

namespace collapse {

// Numerical failures (rank deficiency, non-SPD input, ...). The CLI maps these
// to exit status 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AsymmetricInput : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficient : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ZeroProbabilityEvent : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A Monte Carlo trial threw; carries the index of the first failing trial.
class TrialFailure : public NumericalError {
 public:
  TrialFailure(std::size_t trial, std::size_t failures, const std::string& what)
      : NumericalError("trial " + std::to_string(trial) + " failed (" +
                       std::to_string(failures) + " failing trial(s)): " + what),
        trial_(trial),
        failures_(failures) {}

  std::size_t trial() const { return trial_; }
  std::size_t failures() const { return failures_; }

 private:
  std::size_t trial_;
  std::size_t failures_;
};

// Caller-side contract violations: shapes, ranges, empty inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class NonPositiveLambda : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class TooFewSamples : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EmptyInput : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class LengthMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class EmptyCorpus : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class UnsupportedOrder : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Configuration errors always name the offending key. The CLI maps these to
// exit status 1.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ConstraintError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace collapse
