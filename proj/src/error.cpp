// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/error.hpp"

namespace matrixflow {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonDivisiblePage: return "NonDivisiblePage";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::BlockSizeMismatch: return "BlockSizeMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LayoutMismatch: return "LayoutMismatch";
    case ErrorCode::DTypeMismatch: return "DTypeMismatch";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::UnknownDType: return "UnknownDType";
    case ErrorCode::Format: return "Format";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

bool Error::is_usage_error() const noexcept {
  switch (code_) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::ConfigParse:
    case ErrorCode::UnknownModel:
    case ErrorCode::UnknownDType:
    case ErrorCode::Io:
      return true;
    default:
      return false;
  }
}

}  // namespace matrixflow
