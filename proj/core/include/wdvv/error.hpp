#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wdvv {

enum class ErrorKind {
  InvalidArgument,
  InfeasibleMargin,
  KernelSingularity,
  SeriesDomain,
  StencilUnsafe,
  SingularMetric,
  DimensionMismatch,
  IndexOutOfRange,
  MetricSliceNotConstant,
  NoInvertibleMetric,
  WrongFamily,
  BranchGuard,
  ZeroWeight,
  GridGuard,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-checkable kind so
/// callers (and tests) can branch on it without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace wdvv
