#pragma once

#include <stdexcept>
#include <string>

namespace ergm {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  usage = 2,
  data = 3,
  numerical = 4,
  nonconvergence = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  const char* kind_name() const noexcept {
    switch (kind_) {
      case ErrorKind::usage: return "usage";
      case ErrorKind::data: return "data";
      case ErrorKind::numerical: return "numerical";
      case ErrorKind::nonconvergence: return "nonconvergence";
    }
    return "unknown";
  }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error(ErrorKind::usage, w) {}
};

struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& w) : Error(ErrorKind::nonconvergence, w) {}
};

}  // namespace ergm
