#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nkge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGridError : public Error {
 public:
  using Error::Error;
};

class NonFiniteFieldError : public Error {
 public:
  using Error::Error;
};

class ResolutionMismatchError : public Error {
 public:
  using Error::Error;
};

class GridMismatchError : public Error {
 public:
  using Error::Error;
};

class UnknownPresetError : public Error {
 public:
  using Error::Error;
};

/// Invalid problem or run parameter; `field()` names the offending entry.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ExpressionError : public Error {
 public:
  ExpressionError(const std::string& message, std::size_t position)
      : Error(message), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A coefficient became non-finite or exceeded the blow-up threshold.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& message, std::int64_t step, double time)
      : Error(message), step_(step), time_(time) {}
  std::int64_t step() const noexcept { return step_; }
  double time() const noexcept { return time_; }

 private:
  std::int64_t step_;
  double time_;
};

class BudgetExceededError : public Error {
 public:
  using Error::Error;
};

class MissingSnapshotError : public Error {
 public:
  using Error::Error;
};

}  // namespace nkge
