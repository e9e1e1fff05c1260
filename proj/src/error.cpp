// SPDX-License-Identifier: Apache-2.0
#include "bofnet/error.hpp"

namespace bofnet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::CompilerUnavailable: return "CompilerUnavailable";
    case ErrorCode::CompilerNotFound: return "CompilerNotFound";
    case ErrorCode::CompileFailed: return "CompileFailed";
    case ErrorCode::EmptyOutput: return "EmptyOutput";
    case ErrorCode::IdOutOfRange: return "IdOutOfRange";
    case ErrorCode::LengthExceedsPadding: return "LengthExceedsPadding";
    case ErrorCode::StateMismatch: return "StateMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace bofnet
