// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace matrixflow {

/// IEEE 754 binary16 storage. Arithmetic is never done in half precision;
/// values are widened to float, combined, and narrowed once.
struct Half {
  std::uint16_t bits = 0;

  static Half from_bits(std::uint16_t b) { return Half{b}; }
  friend bool operator==(Half, Half) = default;
};

/// Round-to-nearest-even conversion, with overflow to infinity and NaN kept quiet.
Half float_to_half(float value);
float half_to_float(Half value);

}  // namespace matrixflow
