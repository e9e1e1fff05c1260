// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bofnet {

enum class ErrorCode {
  InvalidArgument,
  Io,
  EmptyPool,
  PoolTooSmall,
  CompilerUnavailable,
  CompilerNotFound,
  CompileFailed,
  EmptyOutput,
  IdOutOfRange,
  LengthExceedsPadding,
  StateMismatch,
  VersionMismatch,
  VocabMismatch,
  CorruptFile,
  TooFewSamples,
  NonFiniteLoss,
  EmptyDataset,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status and callers can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bofnet
