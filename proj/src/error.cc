#include "synthehr/error.h"

namespace synthehr {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kTransportFailure: return "transport-failure";
    case ErrorCode::kMalformedResponse: return "malformed-response";
    case ErrorCode::kDuplicateKey: return "duplicate-key";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kEmptySelection: return "empty-selection";
    case ErrorCode::kStoreWrite: return "store-write";
    case ErrorCode::kInsufficientPopulation: return "insufficient-population";
    case ErrorCode::kUnknownAnnotation: return "unknown-annotation";
    case ErrorCode::kInvalidLabel: return "invalid-label";
    case ErrorCode::kEmptyLayer: return "empty-layer";
    case ErrorCode::kUnknownDimension: return "unknown-dimension";
    case ErrorCode::kUnknownBatch: return "unknown-batch";
    case ErrorCode::kTokenConflict: return "token-conflict";
  }
  return "unknown";
}

}  // namespace synthehr
