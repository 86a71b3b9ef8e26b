#pragma once

#include <stdexcept>
#include <string>

namespace nhe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter, field or input violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Quadrature could not reach the requested tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : Error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A monotone root search could not bracket or converge.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// File or stream I/O failed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nhe
