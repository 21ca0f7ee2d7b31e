#pragma once
#include <stdexcept>
#include <string>

namespace magflow {

// Base for every recoverable failure raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct UnsupportedError : Error { using Error::Error; };
struct DegenerateInput : Error { using Error::Error; };
struct NoReturn : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct InvalidRegion : Error { using Error::Error; };
struct NoBracket : Error { using Error::Error; };
struct NoGlobalPrimitive : Error { using Error::Error; };
struct UndefinedAction : Error { using Error::Error; };
struct InvalidCandidate : Error { using Error::Error; };

struct ConfigError : Error {
  int line;  // 0 when the problem is not tied to a line
  ConfigError(const std::string& what, int line_no = 0)
      : Error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what),
        line(line_no) {}
};

}  // namespace magflow
