#pragma once

#include <stdexcept>
#include <string>

namespace tactile {

enum class ErrorKind {
  InvalidArgument,
  Numerical,
  Io,
  Config,
  Protocol,
  EmptyReconstruction,
};

// Single exception type for the core; the C API maps `kind()` onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tactile
