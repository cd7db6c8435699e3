#ifndef SYNTHEHR_ERROR_H_
#define SYNTHEHR_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace synthehr {

enum class ErrorCode {
  kInvalidArgument,
  kOutOfRange,
  kInvalidConfig,
  kTransportFailure,
  kMalformedResponse,
  kDuplicateKey,
  kNotFound,
  kEmptySelection,
  kStoreWrite,
  kInsufficientPopulation,
  kUnknownAnnotation,
  kInvalidLabel,
  kEmptyLayer,
  kUnknownDimension,
  kUnknownBatch,
  kTokenConflict,
};

// Stable kebab-case name, used in CLI messages and HTTP error payloads.
std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace synthehr

#endif  // SYNTHEHR_ERROR_H_
