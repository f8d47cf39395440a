#pragma once

#include <stdexcept>
#include <string>

namespace pagsr {

// Base of every error raised by the library. kind() is a short stable tag
// used by the CLI for its one-line machine-parsable error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class AutogradError : public Error {
 public:
  explicit AutogradError(const std::string& what) : Error("autograd", what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

// Weight-file errors. Each failure mode has its own type so callers can
// tell a corrupt file from an incompatible one.
class FormatError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public FormatError {
 public:
  explicit BadMagicError(const std::string& what) : FormatError("bad_magic", what) {}
};

class VersionError : public FormatError {
 public:
  explicit VersionError(const std::string& what) : FormatError("version", what) {}
};

class TruncatedError : public FormatError {
 public:
  explicit TruncatedError(const std::string& what) : FormatError("truncated", what) {}
};

class DimMismatchError : public FormatError {
 public:
  explicit DimMismatchError(const std::string& what) : FormatError("dim_mismatch", what) {}
};

class ConfigMismatchError : public FormatError {
 public:
  explicit ConfigMismatchError(const std::string& what)
      : FormatError("config_mismatch", what) {}
};

}  // namespace pagsr
