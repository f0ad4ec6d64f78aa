#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sbmes {

enum class ErrorCode {
  kNone = 0,
  kInvalidArgument,
  kNotSymmetric,
  kNotPsd,
  kInsufficientSpectrum,
  kIsolatedVertex,
  kDegenerateConfiguration,
  kInvalidScaling,
  kCovarianceNotPd,
  kComponentCollapse,
  kLabelOutOfRange,
  kNothingToCompare,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable reason code. The run driver stores
/// the code in its report when an engine aborts.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sbmes
