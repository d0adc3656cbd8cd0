#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oqmem {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameterError : public Error { using Error::Error; };
class DegenerateGeometryError : public Error { using Error::Error; };
class InvalidGeometryError : public Error { using Error::Error; };
class IncompleteModelError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class ProtocolOrderError : public Error { using Error::Error; };
class CalibrationError : public Error { using Error::Error; };
class UndefinedEventError : public Error { using Error::Error; };
class DiagnosticsError : public Error { using Error::Error; };
class InvalidSequenceError : public Error { using Error::Error; };

/// Fixed-point iteration failed to reach tolerance; carries the residuals.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

}  // namespace oqmem
