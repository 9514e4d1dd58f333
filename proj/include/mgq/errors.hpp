#pragma once

#include <stdexcept>
#include <string>

namespace mgq {

/// Broad failure class; the CLI maps each one to an exit code.
enum class ErrorKind { validation = 1, data = 2, solver = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

// Validation failures: bad arguments, bad configs, bad matrices.
struct ParameterError : ValidationError { using ValidationError::ValidationError; };
struct DimensionError : ValidationError { using ValidationError::ValidationError; };
struct ConfigError : ValidationError { using ValidationError::ValidationError; };
struct UnsupportedProblemError : ValidationError { using ValidationError::ValidationError; };

// Data failures: inputs that parse but cannot support the computation.
struct MalformedInputError : DataError { using DataError::DataError; };
struct PriceValidationError : DataError { using DataError::DataError; };
struct InsufficientDataError : DataError { using DataError::DataError; };
struct NoDataForYearError : DataError { using DataError::DataError; };
struct DegenerateSeriesError : DataError { using DataError::DataError; };
struct MismatchError : DataError { using DataError::DataError; };
struct AlignmentError : DataError { using DataError::DataError; };
struct DegenerateRegressorError : DataError { using DataError::DataError; };
struct InsufficientHistoryError : DataError { using DataError::DataError; };

// Solver failures.
struct TooLargeError : SolverError { using SolverError::SolverError; };

}  // namespace mgq
