#pragma once

#include <stdexcept>
#include <string>

namespace kmgl {

enum class ErrorKind {
  InvalidWeight,
  Dimension,
  DegenerateGraph,
  SingularKernel,
  InvalidKernel,
  SingularFilter,
  EmptyCluster,
  Configuration,
  DegenerateClustering,
  InternalConsistency,
  Schema,
  Io,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` selects the failure class
/// and maps onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidWeight: return "invalid weight";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::DegenerateGraph: return "degenerate graph";
    case ErrorKind::SingularKernel: return "singular kernel";
    case ErrorKind::InvalidKernel: return "invalid kernel";
    case ErrorKind::SingularFilter: return "singular filter";
    case ErrorKind::EmptyCluster: return "empty cluster";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::DegenerateClustering: return "degenerate clustering";
    case ErrorKind::InternalConsistency: return "internal consistency error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

/// CLI exit code: 2 configuration, 3 numerical/degenerate, 4 I/O.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Configuration:
    case ErrorKind::Dimension:
    case ErrorKind::Schema:
      return 2;
    case ErrorKind::Io:
      return 4;
    default:
      return 3;
  }
}

}  // namespace kmgl
