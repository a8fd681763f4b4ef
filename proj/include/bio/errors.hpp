#pragma once

#include <stdexcept>
#include <string>

namespace bio {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatches, malformed files, empty sets.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Parameter values outside their admissible range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A requested operator combination has no closed-form path.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed; `block()` names the failing update.
class NumericalError : public Error {
 public:
  NumericalError(std::string block, const std::string& what);
  const std::string& block() const noexcept { return block_; }

 private:
  std::string block_;
};

/// An external process (plugin) failed or timed out.
class ExternalError : public Error {
 public:
  ExternalError(const std::string& what, std::string diagnostics);
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

}  // namespace bio
