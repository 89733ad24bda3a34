#include "rss/error.hpp"

namespace rss {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::MaxIterationsExceeded: return "MaxIterationsExceeded";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZeroPreconditioner: return "ZeroPreconditioner";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::AllUnstable: return "AllUnstable";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace rss
