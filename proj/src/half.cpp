// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/half.hpp"

#include <bit>

namespace matrixflow {

Half float_to_half(float value) {
  const std::uint32_t f = std::bit_cast<std::uint32_t>(value);
  const std::uint32_t sign = (f >> 16) & 0x8000u;
  const std::uint32_t exp = (f >> 23) & 0xffu;
  std::uint32_t mant = f & 0x7fffffu;

  if (exp == 0xffu) {
    // inf stays inf; NaN keeps its top payload bits and is forced quiet
    const std::uint32_t nan_bits = mant ? (0x200u | (mant >> 13)) : 0u;
    return Half::from_bits(static_cast<std::uint16_t>(sign | 0x7c00u | nan_bits));
  }

  const int unbiased = static_cast<int>(exp) - 127;
  if (unbiased > 15) {
    return Half::from_bits(static_cast<std::uint16_t>(sign | 0x7c00u));
  }

  if (unbiased >= -14) {
    // normal half: keep 10 mantissa bits, round the 13 dropped bits
    std::uint32_t half_exp = static_cast<std::uint32_t>(unbiased + 15);
    std::uint32_t out = (half_exp << 10) | (mant >> 13);
    const std::uint32_t rem = mant & 0x1fffu;
    if (rem > 0x1000u || (rem == 0x1000u && (out & 1u))) {
      ++out;  // carry may roll into the exponent, up to infinity; both are correct
    }
    return Half::from_bits(static_cast<std::uint16_t>(sign | out));
  }

  // subnormal or zero in half precision
  if (unbiased < -25) {
    return Half::from_bits(static_cast<std::uint16_t>(sign));
  }
  mant |= 0x800000u;  // implicit leading one
  const int shift = -1 - unbiased;  // value = full * 2^(unbiased - 23), unit = 2^-24
  const std::uint32_t total_shift = static_cast<std::uint32_t>(shift);
  std::uint32_t out = mant >> total_shift;
  const std::uint32_t rem = mant & ((1u << total_shift) - 1u);
  const std::uint32_t halfway = 1u << (total_shift - 1u);
  if (rem > halfway || (rem == halfway && (out & 1u))) {
    ++out;
  }
  return Half::from_bits(static_cast<std::uint16_t>(sign | out));
}

float half_to_float(Half value) {
  const std::uint32_t h = value.bits;
  const std::uint32_t sign = (h & 0x8000u) << 16;
  const std::uint32_t exp = (h >> 10) & 0x1fu;
  std::uint32_t mant = h & 0x3ffu;

  std::uint32_t out;
  if (exp == 0x1fu) {
    out = sign | 0x7f800000u | (mant << 13);
  } else if (exp != 0) {
    out = sign | ((exp + 112u) << 23) | (mant << 13);
  } else if (mant == 0) {
    out = sign;
  } else {
    // renormalize the subnormal
    int e = -1;
    do {
      ++e;
      mant <<= 1;
    } while ((mant & 0x400u) == 0);
    mant &= 0x3ffu;
    out = sign | (static_cast<std::uint32_t>(112 - e) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(out);
}

}  // namespace matrixflow
