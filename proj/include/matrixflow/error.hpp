// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matrixflow {

enum class ErrorCode {
  NonDivisiblePage,
  EmptyMatrix,
  IndexOutOfRange,
  BlockSizeMismatch,
  ShapeMismatch,
  LayoutMismatch,
  DTypeMismatch,
  GeometryMismatch,
  InvalidConfig,
  ConfigParse,
  UnknownModel,
  UnknownDType,
  Format,
  Io,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

  /// True for errors caused by user input (flags, config files, model names).
  bool is_usage_error() const noexcept;

 private:
  ErrorCode code_;
};

}  // namespace matrixflow
