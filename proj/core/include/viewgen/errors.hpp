#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace viewgen {

/// Raised when a precondition on an argument is violated.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A view whose geometry makes an encoding undefined (coincident vertices).
class DegenerateView : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Loss became NaN or infinite during optimization.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was invoked on an object that is not ready for it.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed file contents (bad magic, wrong dimensions, truncated data).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One or more dataset files could not be read; `paths()` lists them.
class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& what, std::vector<std::string> paths)
      : std::runtime_error(what), paths_(std::move(paths)) {}

  const std::vector<std::string>& paths() const noexcept { return paths_; }

 private:
  std::vector<std::string> paths_;
};

}  // namespace viewgen
