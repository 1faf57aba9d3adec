#include "distdyn/error.hpp"

namespace distdyn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonPositiveIncome: return "NonPositiveIncome";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MissingCpi: return "MissingCpi";
    case ErrorCode::EmptyYear: return "EmptyYear";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::MissingBaseYear: return "MissingBaseYear";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::EmptyPanel: return "EmptyPanel";
    case ErrorCode::AlreadyRelative: return "AlreadyRelative";
    case ErrorCode::NotRelative: return "NotRelative";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ZeroSpread: return "ZeroSpread";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::DegenerateGrid: return "DegenerateGrid";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoSupportedRows: return "NoSupportedRows";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::NoClosedForm: return "NoClosedForm";
    case ErrorCode::MissingYear: return "MissingYear";
    case ErrorCode::DegenerateSurface: return "DegenerateSurface";
    case ErrorCode::EmptyPlot: return "EmptyPlot";
  }
  return "Unknown";
}

}  // namespace distdyn
