// errors.hpp: exception types shared by all modules
#pragma once

#include <stdexcept>
#include <string>

namespace nelson {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct DimensionCap : Error {
  using Error::Error;
};

// Mass pushed beyond the occupation cap exceeded the caller's tolerance.
struct TruncationTail : Error {
  TruncationTail(const std::string& what, double tail) : Error(what), tail(tail) {}
  double tail;
};

struct NoConvergence : Error {
  NoConvergence(const std::string& what, double residual) : Error(what), residual(residual) {}
  double residual;
};

struct GradientBound : Error {
  using Error::Error;
};

struct LadderTooDeep : Error {
  using Error::Error;
};

struct ToleranceNotMet : Error {
  ToleranceNotMet(const std::string& what, double achieved) : Error(what), achieved(achieved) {}
  double achieved;
};

struct MissingGroundState : Error {
  using Error::Error;
};

struct CacheError : Error {
  using Error::Error;
};

}  // namespace nelson
