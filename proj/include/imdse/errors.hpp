#pragma once

#include <stdexcept>
#include <string>

namespace imdse {

// Base for every numerical failure raised by the library. The CLI maps
// these to exit code 2; configuration and CSV problems have their own types.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateParameters : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoSolution : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RankDeficient : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonFinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DimensionMismatch : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace imdse
