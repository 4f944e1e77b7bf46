#include "lobkin/error.hpp"

namespace lobkin {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::InvalidDensity: return "invalid density";
    case ErrorCode::NonConvergence: return "no convergence";
    case ErrorCode::SupercriticalLambda: return "supercritical market-order fraction";
    case ErrorCode::SupercriticalRates: return "supercritical market-order rates";
    case ErrorCode::SingularSystem: return "singular system";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::Io: return "i/o error";
  }
  return "unknown error";
}

}  // namespace lobkin
