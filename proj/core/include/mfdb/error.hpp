#pragma once

#include <stdexcept>
#include <string>

namespace mfdb {

/// Broad failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kUsage,      // bad arguments or configuration
  kData,       // malformed or inconsistent input data
  kNumerical,  // factorization, convergence or solver failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

}  // namespace mfdb
