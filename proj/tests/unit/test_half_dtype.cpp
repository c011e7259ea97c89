// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "../oracles.hpp"
#include "matrixflow/dtype.hpp"
#include "matrixflow/error.hpp"
#include "matrixflow/half.hpp"

using namespace matrixflow;

TEST_SUITE("half") {
  TEST_CASE("known encodings") {
    CHECK(float_to_half(1.0f).bits == 0x3c00);
    CHECK(float_to_half(-2.0f).bits == 0xc000);
    CHECK(float_to_half(65504.0f).bits == 0x7bff);
    CHECK(float_to_half(65520.0f).bits == 0x7c00);
    CHECK(float_to_half(1e9f).bits == 0x7c00);
    CHECK(float_to_half(std::ldexp(1.0f, -24)).bits == 0x0001);
    CHECK(float_to_half(std::ldexp(1.0f, -26)).bits == 0x0000);
    CHECK(float_to_half(-0.0f).bits == 0x8000);
    const Half nan = float_to_half(std::numeric_limits<float>::quiet_NaN());
    CHECK((nan.bits & 0x7c00) == 0x7c00);
    CHECK((nan.bits & 0x03ff) != 0);
  }

  TEST_CASE("ties round to even") {
    CHECK(half_to_float(float_to_half(2049.0f)) == 2048.0f);
    CHECK(half_to_float(float_to_half(2051.0f)) == 2052.0f);
    CHECK(half_to_float(float_to_half(2050.0f)) == 2050.0f);
  }

  TEST_CASE("every pattern decodes like the field definitions and re-encodes to itself") {
    for (std::uint32_t b = 0; b <= 0xffff; ++b) {
      const Half h{static_cast<std::uint16_t>(b)};
      const float f = half_to_float(h);
      const double expect = oracle::half_value(h.bits);
      if (std::isnan(expect)) {
        REQUIRE(std::isnan(f));
        continue;
      }
      REQUIRE(static_cast<double>(f) == expect);
      REQUIRE(float_to_half(f).bits == h.bits);
    }
  }

  TEST_CASE("random floats match the exhaustive nearest search") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<float> mant(-1.0f, 1.0f);
    std::uniform_int_distribution<int> expo(-30, 17);
    for (int n = 0; n < 1500; ++n) {
      const float x = std::ldexp(mant(rng), expo(rng));
      REQUIRE_MESSAGE(float_to_half(x).bits == oracle::nearest_half(x), "x = " << x);
    }
  }
}

TEST_SUITE("dtype") {
  TEST_CASE("table constants") {
    CHECK(DType::of(DTypeKind::Int8).array_power_mw == 353.64);
    CHECK(DType::of(DTypeKind::Int16).array_power_mw == 409.74);
    CHECK(DType::of(DTypeKind::Int32).array_power_mw == 585.20);
    CHECK(DType::of(DTypeKind::Fp16).array_power_mw == 245.661);
    CHECK(DType::of(DTypeKind::Fp32).array_power_mw == 320.32);
    for (DTypeKind k : kAllDTypes) {
      const DType d = DType::of(k);
      CHECK(d.byte_width == byte_width(k));
      CHECK(d.array_freq_hz == (is_integer(k) ? 1e9 : 0.6e9));
      CHECK(d.is_integer() == is_integer(k));
    }
  }

  TEST_CASE("parse and name") {
    for (DTypeKind k : kAllDTypes) CHECK(parse_dtype(dtype_name(k)) == k);
    CHECK(parse_dtype("FLOAT16") == DTypeKind::Fp16);
    CHECK_THROWS_AS(parse_dtype("int4"), Error);
    try {
      parse_dtype("bf16");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownDType);
      CHECK(e.is_usage_error());
    }
  }

  TEST_CASE("table overrides are validated") {
    DTypeTable t;
    DType d = t[DTypeKind::Int8];
    d.array_power_mw = 100.0;
    t.set(d);
    CHECK(t[DTypeKind::Int8].array_power_mw == 100.0);
    d.array_freq_hz = 0.0;
    CHECK_THROWS_AS(t.set(d), Error);
    d = t[DTypeKind::Int8];
    d.byte_width = 2;
    CHECK_THROWS_AS(t.set(d), Error);
  }

  TEST_CASE("integer narrowing is a single modular cast") {
    using T8 = ElementTraits<DTypeKind::Int8>;
    const auto acc = T8::mac(0, 127, 127);
    CHECK(acc == 16129);
    CHECK(T8::narrow(acc) == 1);  // 16129 mod 256
    using T32 = ElementTraits<DTypeKind::Int32>;
    CHECK(T32::mac(std::numeric_limits<std::int32_t>::max(), 1, 1) == std::numeric_limits<std::int32_t>::min());
  }
}
