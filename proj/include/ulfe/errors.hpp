#ifndef ULFE_ERRORS_HPP
#define ULFE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ulfe {

// Base for every error the library raises on purpose. Precondition failures on
// argument shapes use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class ColumnRankDeficient : public Error {
 public:
  using Error::Error;
};

class NotHurwitz : public Error {
 public:
  explicit NotHurwitz(double abscissa)
      : Error("matrix is not Hurwitz (max real part of eigenvalues = " +
              std::to_string(abscissa) + ")"),
        abscissa_(abscissa) {}
  double abscissa() const noexcept { return abscissa_; }

 private:
  double abscissa_;
};

class NonFiniteNonlinearity : public Error {
 public:
  using Error::Error;
};

class Infeasible : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class PNotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class IdentityViolation : public Error {
 public:
  using Error::Error;
};

class SingularMassMatrix : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  NonFiniteState(double time, const std::string& what)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ulfe

#endif  // ULFE_ERRORS_HPP
