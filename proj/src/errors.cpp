#include "stochham/errors.hpp"

namespace stochham {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::GridMismatch: return "grid mismatch";
    case ErrorCode::NonFinite: return "non-finite value";
    case ErrorCode::PreconditionViolated: return "precondition violated";
    case ErrorCode::NotAvailable: return "not available";
    case ErrorCode::UnknownName: return "unknown name";
    case ErrorCode::ResourceLimit: return "resource limit";
    case ErrorCode::AllPathsExploded: return "all paths exploded";
    case ErrorCode::ExplosionCapExceeded: return "explosion cap exceeded";
    case ErrorCode::Io: return "io";
  }
  return "error";
}

}  // namespace stochham
