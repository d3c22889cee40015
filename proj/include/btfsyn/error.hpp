#pragma once

#include <stdexcept>
#include <string>

namespace btf {

enum class ErrorKind {
  Argument,
  Format,
  Corruption,
  Version,
  Io,
  DegeneratePair,
  OutOfHemisphere,
  Configuration,
  Numeric,
  Internal,
};

/// Library-wide exception. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 0 success, 2 argument error, 3 data/format error, 4 numeric failure.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument:
    case ErrorKind::Configuration:
      return 2;
    case ErrorKind::Format:
    case ErrorKind::Corruption:
    case ErrorKind::Version:
    case ErrorKind::Io:
      return 3;
    case ErrorKind::DegeneratePair:
    case ErrorKind::OutOfHemisphere:
    case ErrorKind::Numeric:
    case ErrorKind::Internal:
      return 4;
  }
  return 4;
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Corruption: return "corruption error";
    case ErrorKind::Version: return "version error";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::DegeneratePair: return "degenerate direction pair";
    case ErrorKind::OutOfHemisphere: return "direction outside upper hemisphere";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Numeric: return "numeric failure";
    case ErrorKind::Internal: return "internal error";
  }
  return "error";
}

}  // namespace btf
