#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vceval {

enum class ErrorCode {
  // corpus
  MissingFile,
  MalformedRecord,
  DanglingReference,
  DuplicateId,
  InvalidFraction,
  // textmetrics
  InvalidN,
  NoReference,
  // questgen
  EmptyMaterial,
  KeywordAbsent,
  EmptyString,
  InsufficientPool,
  NoQuestions,
  InvariantViolation,
  // learner
  EmptyCorpus,
  ConfigInvalid,
  ContextOverflow,
  EmptyCourse,
  EmptyExamSet,
  StageOrder,
  IoError,
  VersionMismatch,
  ChecksumMismatch,
  // evaluator
  EmptyResults,
  TargetMissing,
  // metaeval
  DegenerateInput,
  NoValidTargets,
  LengthMismatch,
  // cli
  NoOverlap,
  SpecInvalid,
  Usage,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure in the library is reported as an Error carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vceval
