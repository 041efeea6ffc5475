#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace vnw {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters handed to a generator or solver.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Two Helmholtz solutions with different wavenumbers were combined.
class IncompatibleWavenumber : public Error {
 public:
  using Error::Error;
};

/// The one-form defining theta is not closed, so the system cannot be integrated.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class PathDependenceError : public Error {
 public:
  using Error::Error;
};

/// The quartic part of Q is not -x^4 - y^4.
class LeadingPartError : public Error {
 public:
  using Error::Error;
};

/// Grid refinement hit the minimum spacing without deciding the sign of Q.
class InconclusiveError : public Error {
 public:
  InconclusiveError(const std::string& what, double x, double y)
      : Error(what), point_(x, y) {}
  std::pair<double, double> point() const { return point_; }

 private:
  std::pair<double, double> point_;
};

class CertificateMissing : public Error {
 public:
  using Error::Error;
};

class SolverStagnation : public Error {
 public:
  using Error::Error;
};

/// A numeric Helmholtz oracle violated its own equation in self-check mode.
class HelmholtzViolation : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace vnw
