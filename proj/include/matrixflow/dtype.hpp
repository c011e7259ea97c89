// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "matrixflow/half.hpp"

namespace matrixflow {

enum class DTypeKind : std::uint8_t { Int8 = 0, Int16 = 1, Int32 = 2, Fp16 = 3, Fp32 = 4 };

inline constexpr std::array<DTypeKind, 5> kAllDTypes = {
    DTypeKind::Int8, DTypeKind::Int16, DTypeKind::Int32, DTypeKind::Fp16, DTypeKind::Fp32};

enum class AccRule : std::uint8_t {
  IntegerWrap32,  // products widened to 32 bits, sums wrap modulo 2^32
  FloatFp32,      // products and sums in fp32, k-ascending
};

/// Element type together with the synthesized array's clock and power for it.
struct DType {
  DTypeKind kind = DTypeKind::Int8;
  int byte_width = 1;
  AccRule acc_rule = AccRule::IntegerWrap32;
  double array_freq_hz = 1e9;
  double array_power_mw = 0.0;
  double array_area_mm2 = 0.0;

  /// Built-in PPA figures of the 16x16 MAC array for this kind.
  static DType of(DTypeKind kind);

  bool is_integer() const { return acc_rule == AccRule::IntegerWrap32; }
  friend bool operator==(const DType&, const DType&) = default;
};

constexpr int byte_width(DTypeKind kind) {
  switch (kind) {
    case DTypeKind::Int8: return 1;
    case DTypeKind::Int16: return 2;
    case DTypeKind::Fp16: return 2;
    case DTypeKind::Int32: return 4;
    case DTypeKind::Fp32: return 4;
  }
  return 0;
}

constexpr bool is_integer(DTypeKind kind) {
  return kind == DTypeKind::Int8 || kind == DTypeKind::Int16 || kind == DTypeKind::Int32;
}

std::string_view dtype_name(DTypeKind kind);

/// Accepts int8/int16/int32/fp16/fp32 (also float16/float32), case-insensitive.
/// Throws Error(UnknownDType).
DTypeKind parse_dtype(std::string_view text);

/// Per-kind constants, overridable from a config file.
class DTypeTable {
 public:
  DTypeTable();  // built-in values

  const DType& operator[](DTypeKind kind) const { return entries_[static_cast<std::size_t>(kind)]; }
  void set(const DType& entry);

  friend bool operator==(const DTypeTable&, const DTypeTable&) = default;

 private:
  std::array<DType, 5> entries_;
};

// ---------------------------------------------------------------------------
// Element traits: storage type, accumulator, widening multiply-add and the
// single narrowing cast applied after the full reduction.
// ---------------------------------------------------------------------------

template <DTypeKind K>
struct ElementTraits;

template <typename Storage>
struct IntegerTraitsBase {
  using storage_type = Storage;
  using acc_type = std::int32_t;

  static acc_type mac(acc_type acc, storage_type a, storage_type b) {
    const auto product = static_cast<std::uint32_t>(static_cast<std::int32_t>(a)) *
                         static_cast<std::uint32_t>(static_cast<std::int32_t>(b));
    return static_cast<acc_type>(static_cast<std::uint32_t>(acc) + product);
  }
  static storage_type narrow(acc_type acc) {
    // modular conversion (well-defined since C++20)
    return static_cast<storage_type>(acc);
  }
  static double to_double(storage_type v) { return static_cast<double>(v); }
};

template <>
struct ElementTraits<DTypeKind::Int8> : IntegerTraitsBase<std::int8_t> {};
template <>
struct ElementTraits<DTypeKind::Int16> : IntegerTraitsBase<std::int16_t> {};
template <>
struct ElementTraits<DTypeKind::Int32> : IntegerTraitsBase<std::int32_t> {};

template <>
struct ElementTraits<DTypeKind::Fp32> {
  using storage_type = float;
  using acc_type = float;

  static acc_type mac(acc_type acc, storage_type a, storage_type b) {
    const float product = a * b;
    return acc + product;
  }
  static storage_type narrow(acc_type acc) { return acc; }
  static double to_double(storage_type v) { return static_cast<double>(v); }
};

template <>
struct ElementTraits<DTypeKind::Fp16> {
  using storage_type = Half;
  using acc_type = float;

  static acc_type mac(acc_type acc, storage_type a, storage_type b) {
    // exact: an 11-bit by 11-bit significand product fits in fp32
    const float product = half_to_float(a) * half_to_float(b);
    return acc + product;
  }
  static storage_type narrow(acc_type acc) { return float_to_half(acc); }
  static double to_double(storage_type v) { return static_cast<double>(half_to_float(v)); }
};

/// Calls `fn.template operator()<K>()` with the compile-time kind.
template <typename Fn>
decltype(auto) visit_dtype(DTypeKind kind, Fn&& fn) {
  switch (kind) {
    case DTypeKind::Int8: return std::forward<Fn>(fn).template operator()<DTypeKind::Int8>();
    case DTypeKind::Int16: return std::forward<Fn>(fn).template operator()<DTypeKind::Int16>();
    case DTypeKind::Int32: return std::forward<Fn>(fn).template operator()<DTypeKind::Int32>();
    case DTypeKind::Fp16: return std::forward<Fn>(fn).template operator()<DTypeKind::Fp16>();
    case DTypeKind::Fp32: break;
  }
  return std::forward<Fn>(fn).template operator()<DTypeKind::Fp32>();
}

}  // namespace matrixflow
