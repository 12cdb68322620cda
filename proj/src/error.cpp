#include "mrnaopt/error.hpp"

namespace mrnaopt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoStop: return "NO_STOP";
    case ErrorCode::InternalStop: return "INTERNAL_STOP";
    case ErrorCode::BadCodon: return "BAD_CODON";
    case ErrorCode::BadProtein: return "BAD_PROTEIN";
    case ErrorCode::BadToken: return "BAD_TOKEN";
    case ErrorCode::SeqTooLong: return "SEQ_TOO_LONG";
    case ErrorCode::BadAlphabet: return "BAD_ALPHABET";
    case ErrorCode::EmptySeq: return "EMPTY_SEQ";
    case ErrorCode::NonpositiveSigma: return "NONPOSITIVE_SIGMA";
    case ErrorCode::ZeroFreq: return "ZERO_FREQ";
    case ErrorCode::CdsTooShort: return "CDS_TOO_SHORT";
    case ErrorCode::SeqTooShort: return "SEQ_TOO_SHORT";
    case ErrorCode::Singular: return "SINGULAR";
    case ErrorCode::LengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::ZeroVariance: return "ZERO_VARIANCE";
    case ErrorCode::DimMismatch: return "DIM_MISMATCH";
    case ErrorCode::IllegalToken: return "ILLEGAL_TOKEN";
    case ErrorCode::LengthOverflow: return "LENGTH_OVERFLOW";
    case ErrorCode::NoValidMembers: return "NO_VALID_MEMBERS";
    case ErrorCode::ZeroStd: return "ZERO_STD";
    case ErrorCode::TraceMismatch: return "TRACE_MISMATCH";
    case ErrorCode::EmptyPool: return "EMPTY_POOL";
    case ErrorCode::BadInput: return "BAD_INPUT";
    case ErrorCode::BadFormat: return "BAD_FORMAT";
    case ErrorCode::Io: return "IO";
  }
  return "UNKNOWN";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::Singular:
    case ErrorCode::NoValidMembers:
    case ErrorCode::TraceMismatch:
    case ErrorCode::LengthOverflow:
    case ErrorCode::Io:
      return false;
    default:
      return true;
  }
}

}  // namespace mrnaopt
