#include "flexstage/error.hpp"

namespace flexstage {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kGeometry:
      return "geometry";
    case ErrorKind::kEigensolver:
      return "eigensolver";
    case ErrorKind::kRankDeficient:
      return "rank-deficient";
    case ErrorKind::kInfeasible:
      return "infeasible";
    case ErrorKind::kConfig:
      return "config";
    case ErrorKind::kIo:
      return "io";
    case ErrorKind::kDivergence:
      return "divergence";
  }
  return "unknown";
}

}  // namespace flexstage
