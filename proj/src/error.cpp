#include "vceval/error.hpp"

namespace vceval {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidFraction: return "InvalidFraction";
    case ErrorCode::InvalidN: return "InvalidN";
    case ErrorCode::NoReference: return "NoReference";
    case ErrorCode::EmptyMaterial: return "EmptyMaterial";
    case ErrorCode::KeywordAbsent: return "KeywordAbsent";
    case ErrorCode::EmptyString: return "EmptyString";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::NoQuestions: return "NoQuestions";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::EmptyCourse: return "EmptyCourse";
    case ErrorCode::EmptyExamSet: return "EmptyExamSet";
    case ErrorCode::StageOrder: return "StageOrder";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::TargetMissing: return "TargetMissing";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::NoValidTargets: return "NoValidTargets";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

}  // namespace vceval
