#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace defhom {

/// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Coefficient quadratic form is not uniformly positive.
class NonElliptic : public Error {
 public:
  using Error::Error;
};

class SingularCell : public Error {
 public:
  using Error::Error;
};

/// Node count of a mesh would exceed the configured cap.
class MeshTooFine : public Error {
 public:
  MeshTooFine(std::size_t requested, std::size_t cap);
  std::size_t requested() const { return requested_; }
  std::size_t cap() const { return cap_; }

 private:
  std::size_t requested_;
  std::size_t cap_;
};

class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t offset, std::vector<std::string> expected);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

/// Model is structurally invalid, e.g. a step() argument depends on u.
class ModelError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

class FactorizationFailure : public Error {
 public:
  using Error::Error;
};

/// An iteration stopped without meeting its tolerance. Carries the residual
/// trace and the observed contraction factors.
class NoConvergence : public Error {
 public:
  NoConvergence(std::string message, std::vector<double> residuals, std::vector<double> factors);
  const std::vector<double>& residuals() const { return residuals_; }
  const std::vector<double>& factors() const { return factors_; }

 private:
  std::vector<double> residuals_;
  std::vector<double> factors_;
};

class NotLinear : public Error {
 public:
  using Error::Error;
};

class InsufficientPoints : public Error {
 public:
  using Error::Error;
};

class MembershipViolation : public Error {
 public:
  MembershipViolation(std::string defect_id, std::string clause);
  const std::string& defect_id() const { return defect_id_; }

 private:
  std::string defect_id_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace defhom
