#pragma once

#include <stdexcept>
#include <string>

namespace curvesolve {

// Error taxonomy mirrored by the CLI exit codes:
//   config/parse -> 2, barrier -> 3, path/monitor/foliation -> 4, internal -> 1.
enum class ErrorKind {
  parse,
  config,
  domain,      // point left the coordinate chart
  cone,        // principal curvatures left the defining cone
  metric,      // metric not positive definite
  ellipticity, // assembled second-order coefficients not positive definite
  barrier,
  foliation,
  particular,  // no admissible tau0 for the requested penalty
  nonconvergence,
  monitor,
  path,
  unsupported,
  internal,
};

class SolverError : public std::runtime_error {
public:
  SolverError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

  int exit_code() const {
    switch (kind_) {
      case ErrorKind::parse:
      case ErrorKind::config:
        return 2;
      case ErrorKind::barrier:
        return 3;
      case ErrorKind::domain:
      case ErrorKind::cone:
      case ErrorKind::metric:
      case ErrorKind::ellipticity:
      case ErrorKind::foliation:
      case ErrorKind::particular:
      case ErrorKind::nonconvergence:
      case ErrorKind::monitor:
      case ErrorKind::path:
        return 4;
      case ErrorKind::unsupported:
      case ErrorKind::internal:
        return 1;
    }
    return 1;
  }

  const char* kind_name() const {
    switch (kind_) {
      case ErrorKind::parse: return "parse";
      case ErrorKind::config: return "config";
      case ErrorKind::domain: return "domain";
      case ErrorKind::cone: return "cone";
      case ErrorKind::metric: return "metric";
      case ErrorKind::ellipticity: return "ellipticity";
      case ErrorKind::barrier: return "barrier";
      case ErrorKind::foliation: return "foliation";
      case ErrorKind::particular: return "particular";
      case ErrorKind::nonconvergence: return "nonconvergence";
      case ErrorKind::monitor: return "monitor";
      case ErrorKind::path: return "path";
      case ErrorKind::unsupported: return "unsupported";
      case ErrorKind::internal: return "internal";
    }
    return "internal";
  }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw SolverError(kind, msg);
}

} // namespace curvesolve
