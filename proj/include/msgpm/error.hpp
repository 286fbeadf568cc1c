#pragma once

#include <stdexcept>
#include <string>

namespace msgpm {

// Every error carries the module that raised it so the CLI can report
// provenance and pick an exit status.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Missing files, unreadable or truncated payloads.
class IoError : public Error {
 public:
  using Error::Error;
};

// Well-formed bytes that are not a supported format (bad magic, bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Rasters that must agree in size but do not; bad parameters.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Degenerate geometry: collinear samples, rank deficiency, points at infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace msgpm
