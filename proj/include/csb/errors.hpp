#pragma once

#include <stdexcept>
#include <string>

namespace csb {

// Base for every failure raised by the library. The CLI maps subclasses
// onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

// Right-hand side of a constrained solve has a kernel component above
// tolerance.
class SolvabilityViolation : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class DegenerateStage : public Error {
 public:
  using Error::Error;
};

class AffineDegenerate : public Error {
 public:
  using Error::Error;
};

// A field is narrower than the grid can represent.
class UnderResolved : public Error {
 public:
  UnderResolved(const std::string& what, double reached_time)
      : Error(what), reached_time_(reached_time) {}
  double reached_time() const noexcept { return reached_time_; }

 private:
  double reached_time_;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Recursion coefficients disagree with the closed-form linear templates.
class TemplateMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace csb
