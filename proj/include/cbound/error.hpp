#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cbound {

/// Coarse failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
  InvalidLabel,
  Capacity,
  DimensionMismatch,
  CorruptVoter,
  EmptyDataset,
  BoundUndefined,
  Inconsistency,
  InvalidParameter,
  Parse,
  Io,
  Degenerate,
  Unsupported,
  UndefinedCorrelation,
};

inline std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidLabel: return "invalid-label";
    case ErrorCategory::Capacity: return "capacity";
    case ErrorCategory::DimensionMismatch: return "dimension-mismatch";
    case ErrorCategory::CorruptVoter: return "corrupt-voter";
    case ErrorCategory::EmptyDataset: return "empty-dataset";
    case ErrorCategory::BoundUndefined: return "bound-undefined";
    case ErrorCategory::Inconsistency: return "inconsistency";
    case ErrorCategory::InvalidParameter: return "invalid-parameter";
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Degenerate: return "degenerate";
    case ErrorCategory::Unsupported: return "unsupported";
    case ErrorCategory::UndefinedCorrelation: return "undefined-correlation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(std::string(category_name(category)) + ": " + what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) { throw Error(c, what); }

}  // namespace cbound
