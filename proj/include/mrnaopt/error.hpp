#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mrnaopt {

enum class ErrorCode {
  // sequence model
  NoStop,
  InternalStop,
  BadCodon,
  BadProtein,
  BadToken,
  // folding
  SeqTooLong,
  BadAlphabet,
  EmptySeq,
  // metrics
  NonpositiveSigma,
  ZeroFreq,
  CdsTooShort,
  // proxy
  SeqTooShort,
  Singular,
  LengthMismatch,
  ZeroVariance,
  DimMismatch,
  // policy
  IllegalToken,
  LengthOverflow,
  // mogrpo
  NoValidMembers,
  ZeroStd,
  TraceMismatch,
  // report
  EmptyPool,
  // io / configuration
  BadInput,
  BadFormat,
  Io,
};

std::string_view to_string(ErrorCode code);

/// True for codes caused by malformed user input rather than a bug or I/O failure.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mrnaopt
