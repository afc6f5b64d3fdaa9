#include "wdvv/error.hpp"

namespace wdvv {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::InfeasibleMargin: return "infeasible margin";
    case ErrorKind::KernelSingularity: return "kernel singularity";
    case ErrorKind::SeriesDomain: return "series domain";
    case ErrorKind::StencilUnsafe: return "stencil leaves the safe region";
    case ErrorKind::SingularMetric: return "singular metric";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::IndexOutOfRange: return "index out of range";
    case ErrorKind::MetricSliceNotConstant: return "metric slice not constant";
    case ErrorKind::NoInvertibleMetric: return "could not draw invertible metric";
    case ErrorKind::WrongFamily: return "wrong family";
    case ErrorKind::BranchGuard: return "branch guard violated";
    case ErrorKind::ZeroWeight: return "zero weight";
    case ErrorKind::GridGuard: return "grid guard exceeded";
  }
  return "unknown error";
}

}  // namespace wdvv
