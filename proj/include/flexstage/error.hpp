#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flexstage {

/// Error categories. The CLI prints them as a stable machine-parsable prefix.
enum class ErrorKind {
  kInvalidArgument,
  kGeometry,
  kEigensolver,
  kRankDeficient,
  kInfeasible,
  kConfig,
  kIo,
  kDivergence,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace flexstage
