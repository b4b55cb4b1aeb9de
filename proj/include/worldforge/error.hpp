#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace worldforge {

enum class ErrorCode {
  InvalidArgument,
  MalformedXml,
  DanglingNodeRef,
  OutOfRange,
  DegeneratePolygon,
  MissingProp,
  FileNotFound,
  ObjParseError,
  MtlParseError,
  MissingUVs,
  NonFiniteState,
  DuplicateSeeds,
  NonConvexInput,
  UnknownBody,
  UnknownEntity,
  NewtonDiverged,
  ResolutionMismatch,
  EmptyInput,
  BadMagic,
  BadHeader,
  TruncatedFile,
  IoError,
  MissingPair,
  Validation,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace worldforge
