#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gapbound {

enum class ErrorCode {
  InvalidArgument,
  DimensionTooLarge,
  NonConvergence,
  SingularShift,
  IterationCapExceeded,
  NotPositiveDefinite,
  BracketInvalid,
  HypothesisHViolated,
  ConditionAViolated,
  NoMinimumFound,
  NoRootInGap,
  MuOutsideBrackets,
  IndexOutOfRange,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularShift: return "SingularShift";
    case ErrorCode::IterationCapExceeded: return "IterationCapExceeded";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::BracketInvalid: return "BracketInvalid";
    case ErrorCode::HypothesisHViolated: return "HypothesisHViolated";
    case ErrorCode::ConditionAViolated: return "ConditionAViolated";
    case ErrorCode::NoMinimumFound: return "NoMinimumFound";
    case ErrorCode::NoRootInGap: return "NoRootInGap";
    case ErrorCode::MuOutsideBrackets: return "MuOutsideBrackets";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  Error(ErrorCode code, const std::string& what, std::vector<std::size_t> indices)
      : Error(code, what) {
    indices_ = std::move(indices);
  }

  ErrorCode code() const noexcept { return code_; }
  /// Offending positions (e.g. interval indices refuting hypothesis (H)).
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

 private:
  ErrorCode code_;
  std::vector<std::size_t> indices_;
};

}  // namespace gapbound
