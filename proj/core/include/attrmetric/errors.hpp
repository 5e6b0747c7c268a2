#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace attrmetric {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands do not agree (e.g. feature length vs. model d).
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::size_t expected,
                 std::size_t actual)
      : Error(what + ": expected " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// Invalid hyperparameters, flags or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class DataErrorKind {
  kMissingFile,
  kParse,
  kRaggedRow,
  kOutOfRange,
  kSplitOverlap,
  kInconsistent,
  kVersion,
  kDimension,
  kNoNegative,
  kEmpty,
};

/// Malformed or inconsistent input data (dataset files, model files, pairs).
class DataError : public Error {
 public:
  DataError(DataErrorKind kind, const std::string& what)
      : Error(what), kind_(kind) {}

  DataErrorKind kind() const noexcept { return kind_; }

 private:
  DataErrorKind kind_;
};

/// Training produced a non-finite loss, usually a divergent learning rate.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int epoch, long step)
      : Error(what + " (epoch " + std::to_string(epoch) + ", step " +
              std::to_string(step) + ")"),
        epoch_(epoch),
        step_(step) {}

  int epoch() const noexcept { return epoch_; }
  long step() const noexcept { return step_; }

 private:
  int epoch_;
  long step_;
};

}  // namespace attrmetric
