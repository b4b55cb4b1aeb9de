#include "worldforge/error.hpp"

namespace worldforge {

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::DanglingNodeRef: return "DanglingNodeRef";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::MissingProp: return "MissingProp";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ObjParseError: return "ObjParseError";
    case ErrorCode::MtlParseError: return "MtlParseError";
    case ErrorCode::MissingUVs: return "MissingUVs";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DuplicateSeeds: return "DuplicateSeeds";
    case ErrorCode::NonConvexInput: return "NonConvexInput";
    case ErrorCode::UnknownBody: return "UnknownBody";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::ResolutionMismatch: return "ResolutionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingPair: return "MissingPair";
    case ErrorCode::Validation: return "Validation";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

}  // namespace worldforge
