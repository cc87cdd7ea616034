#pragma once

#include <stdexcept>
#include <string>

namespace physproj {

/// Bad user input: malformed configuration, shape mismatch, out-of-range
/// hyperparameter. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// A computation produced NaN/Inf or otherwise failed numerically. The CLI
/// maps these to exit code 2.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class TrainingDiverged : public NumericalError {
public:
  using NumericalError::NumericalError;
};

void require(bool condition, const std::string& message);
void require_shape(bool condition, const std::string& message);

} // namespace physproj
