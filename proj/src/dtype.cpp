// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/dtype.hpp"

#include <algorithm>
#include <cctype>

#include "matrixflow/error.hpp"

namespace matrixflow {

DType DType::of(DTypeKind kind) {
  // 16x16 MAC array, TSMC 28nm HPC synthesis
  switch (kind) {
    case DTypeKind::Int32: return {kind, 4, AccRule::IntegerWrap32, 1e9, 585.20, 0.611};
    case DTypeKind::Int16: return {kind, 2, AccRule::IntegerWrap32, 1e9, 409.74, 0.193};
    case DTypeKind::Int8: return {kind, 1, AccRule::IntegerWrap32, 1e9, 353.64, 0.054};
    case DTypeKind::Fp32: return {kind, 4, AccRule::FloatFp32, 0.6e9, 320.32, 0.694};
    case DTypeKind::Fp16: return {kind, 2, AccRule::FloatFp32, 0.6e9, 245.661, 0.199};
  }
  throw Error(ErrorCode::UnknownDType, "invalid dtype kind");
}

std::string_view dtype_name(DTypeKind kind) {
  switch (kind) {
    case DTypeKind::Int8: return "int8";
    case DTypeKind::Int16: return "int16";
    case DTypeKind::Int32: return "int32";
    case DTypeKind::Fp16: return "fp16";
    case DTypeKind::Fp32: return "fp32";
  }
  return "?";
}

DTypeKind parse_dtype(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "int8") return DTypeKind::Int8;
  if (lower == "int16") return DTypeKind::Int16;
  if (lower == "int32") return DTypeKind::Int32;
  if (lower == "fp16" || lower == "float16") return DTypeKind::Fp16;
  if (lower == "fp32" || lower == "float32") return DTypeKind::Fp32;
  throw Error(ErrorCode::UnknownDType, "unknown dtype '" + std::string(text) + "'");
}

DTypeTable::DTypeTable() {
  for (DTypeKind kind : kAllDTypes) {
    entries_[static_cast<std::size_t>(kind)] = DType::of(kind);
  }
}

void DTypeTable::set(const DType& entry) {
  if (entry.byte_width != byte_width(entry.kind)) {
    throw Error(ErrorCode::InvalidConfig, "byte width does not match dtype " +
                                              std::string(dtype_name(entry.kind)));
  }
  if (!(entry.array_freq_hz > 0.0) || entry.array_power_mw < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "array frequency must be positive and power non-negative");
  }
  entries_[static_cast<std::size_t>(entry.kind)] = entry;
}

}  // namespace matrixflow
