// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>
#include <vector>

#include "../oracles.hpp"
#include "matrixflow/block_layout.hpp"

using namespace matrixflow;

namespace {

std::vector<std::byte> bytes_of(std::span<const std::byte> s) { return {s.begin(), s.end()}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_SUITE("block_layout") {
  TEST_CASE("geometry") {
    CHECK(block_geometry(DTypeKind::Int8).l == 256);
    CHECK(block_geometry(DTypeKind::Int16).l == 128);
    CHECK(block_geometry(DTypeKind::Fp16).l == 128);
    CHECK(block_geometry(DTypeKind::Int32).l == 64);
    CHECK(block_geometry(DTypeKind::Fp32).l == 64);
    for (DTypeKind k : kAllDTypes) {
      const BlockGeometry g = block_geometry(k);
      CHECK(g.w == 16);
      CHECK(g.elements() * static_cast<std::size_t>(byte_width(k)) == 4096);
    }
    CHECK(code_of([] { block_geometry(DTypeKind::Int8, 3); }) == ErrorCode::NonDivisiblePage);
    CHECK_THROWS_AS(block_geometry(DTypeKind::Int8, 0), Error);
    CHECK(block_geometry(DTypeKind::Int32, 32).l == 32);
  }

  TEST_CASE("empty matrix is rejected") {
    DenseMatrix empty(0, 5, DTypeKind::Int8);
    CHECK(code_of([&] { pack_a(empty); }) == ErrorCode::EmptyMatrix);
    CHECK(code_of([&] { pack_b(empty); }) == ErrorCode::EmptyMatrix);
  }

  TEST_CASE("one-block A equals the dense bytes") {
    std::mt19937_64 rng(1);
    const DenseMatrix x = oracle::random_dense(16, 256, DTypeKind::Int8, rng);
    const BlockedMatrix a = pack_a(x);
    CHECK(a.block_count() == 1);
    CHECK(bytes_of(get_block(a, 0, 0)) == bytes_of(x.bytes()));
  }

  TEST_CASE("17x257 pads to a 2x2 grid with zero padding") {
    std::mt19937_64 rng(2);
    const DenseMatrix x = oracle::random_dense(17, 257, DTypeKind::Int8, rng);
    const BlockedMatrix a = pack_a(x);
    CHECK(a.grid() == BlockGrid{2, 2});
    CHECK(a.padded_rows() == 32);
    CHECK(a.padded_cols() == 512);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < 2; ++k)
        CHECK(bytes_of(a.block(i, k)) == oracle::expected_page(x, Layout::ARowBand, i, k, 16, 256));
    // a pad element lives at dense (17, 300) -> block (1,1), row 1, col 44
    CHECK(a.block(1, 1)[1 * 256 + 44] == std::byte{0});
  }

  TEST_CASE("32x512 A block (1,1) is the dense slice [16,32)x[256,512)") {
    std::mt19937_64 rng(3);
    const DenseMatrix x = oracle::random_dense(32, 512, DTypeKind::Int8, rng);
    const auto page = pack_a(x).block(1, 1);
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 256; ++c)
        REQUIRE(std::to_integer<std::int8_t>(page[r * 256 + c]) == x.at<std::int8_t>(16 + r, 256 + c));
  }

  TEST_CASE("B layout matches the scalar transposition oracle") {
    DenseMatrix x(256, 16, DTypeKind::Int8);
    for (std::size_t r = 0; r < 256; ++r)
      for (std::size_t c = 0; c < 16; ++c) x.set<std::int8_t>(r, c, static_cast<std::int8_t>(r == c ? 1 : (r * 3 + c) & 0x7f));
    const BlockedMatrix b = pack_b(x);
    CHECK(b.block_count() == 1);
    CHECK(bytes_of(b.block(0, 0)) == oracle::expected_page(x, Layout::BRestructured, 0, 0, 16, 256));
  }

  TEST_CASE("1x1 Int32 B holds one payload element") {
    DenseMatrix x(1, 1, DTypeKind::Int32);
    x.set<std::int32_t>(0, 0, -77);
    const BlockedMatrix b = pack_b(x);
    CHECK(b.block_count() == 1);
    std::int32_t first;
    std::memcpy(&first, b.block(0, 0).data(), 4);
    CHECK(first == -77);
    CHECK(std::all_of(b.block(0, 0).begin() + 4, b.block(0, 0).end(), [](std::byte v) { return v == std::byte{0}; }));
  }

  TEST_CASE("B streamability: column c of block (j,k) is B[kL.., jW+c]") {
    std::mt19937_64 rng(4);
    for (DTypeKind kind : kAllDTypes) {
      const DenseMatrix x = oracle::random_dense(300, 70, kind, rng);
      const BlockedMatrix b = pack_b(x);
      const auto g = b.geometry();
      const auto eb = static_cast<std::size_t>(byte_width(kind));
      for (std::size_t j = 0; j < b.grid().rows; ++j)
        for (std::size_t k = 0; k < b.grid().cols; ++k) {
          const auto page = b.block(j, k);
          for (int c = 0; c < g.w; ++c) {
            for (int r = 0; r < g.l; ++r) {
              const std::size_t dr = k * g.l + r, dc = j * g.w + c;
              const std::byte* got = page.data() + (static_cast<std::size_t>(c) * g.l + r) * eb;
              if (dr < x.rows() && dc < x.cols()) {
                REQUIRE(std::equal(got, got + eb, oracle::element(x, dr, dc).begin()));
              } else {
                REQUIRE(std::all_of(got, got + eb, [](std::byte v) { return v == std::byte{0}; }));
              }
            }
          }
        }
    }
  }

  TEST_CASE("round-trip over random shapes and every dtype") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> dim(1, 300);
    for (int n = 0; n < 60; ++n) {
      const DTypeKind kind = kAllDTypes[static_cast<std::size_t>(n) % kAllDTypes.size()];
      const DenseMatrix x = oracle::random_dense(dim(rng), dim(rng), kind, rng);
      const BlockedMatrix a = pack_a(x);
      const BlockedMatrix b = pack_b(x);
      REQUIRE(unpack(a) == x);
      REQUIRE(unpack(b) == x);
      const auto g = a.geometry();
      CHECK(a.block_count() == ((x.rows() + g.w - 1) / g.w) * ((x.cols() + g.l - 1) / g.l));
      CHECK(a.storage().size() == a.block_count() * kPageBytes);
      CHECK(reinterpret_cast<std::uintptr_t>(a.storage().data()) % kPageBytes == 0);
    }
  }

  TEST_CASE("unpack of patterns") {
    DenseMatrix zero(64, 64, DTypeKind::Int16);
    CHECK(unpack(pack_a(zero)) == zero);
    DenseMatrix pattern(16, 256, DTypeKind::Int8);
    for (std::size_t i = 0; i < 4096; ++i) pattern.bytes()[i] = static_cast<std::byte>(i & 0xff);
    CHECK(unpack(pack_a(pattern)) == pattern);
  }

  TEST_CASE("block access errors and set/get") {
    std::mt19937_64 rng(6);
    BlockedMatrix a = pack_a(oracle::random_dense(40, 300, DTypeKind::Int8, rng));
    CHECK(code_of([&] { get_block(a, a.grid().rows, 0); }) == ErrorCode::IndexOutOfRange);
    CHECK(code_of([&] { get_block(a, 0, a.grid().cols); }) == ErrorCode::IndexOutOfRange);
    std::vector<std::byte> page(kPageBytes, std::byte{0x5a});
    set_block(a, 2, 1, page);
    CHECK(bytes_of(get_block(a, 2, 1)) == page);
    std::vector<std::byte> small(100);
    CHECK(code_of([&] { set_block(a, 0, 0, small); }) == ErrorCode::BlockSizeMismatch);
    CHECK(code_of([&] { set_block(a, 9, 0, page); }) == ErrorCode::IndexOutOfRange);
  }

  TEST_CASE("set every block from an oracle then unpack") {
    std::mt19937_64 rng(8);
    const DenseMatrix x = oracle::random_dense(50, 90, DTypeKind::Fp32, rng);
    BlockedMatrix b(50, 90, DTypeKind::Fp32, Layout::BRestructured);
    for (std::size_t j = 0; j < b.grid().rows; ++j)
      for (std::size_t k = 0; k < b.grid().cols; ++k)
        set_block(b, j, k, oracle::expected_page(x, Layout::BRestructured, j, k, 16, 64));
    CHECK(unpack(b) == x);
  }

  TEST_CASE("result tiles pack L/W per page") {
    BlockedMatrix c(16, 512, DTypeKind::Int8, Layout::ARowBand);
    std::vector<std::byte> tile(256);
    for (std::size_t i = 0; i < tile.size(); ++i) tile[i] = static_cast<std::byte>(i);
    c.set_tile(0, 17, tile);  // page (0, 1), tile slot 1
    CHECK(c.tile(0, 17) == tile);
    const DenseMatrix d = unpack(c);
    CHECK(d.at<std::int8_t>(0, 17 * 16) == 0);
    CHECK(d.at<std::int8_t>(1, 17 * 16) == 16);
  }

  TEST_CASE("binary format round-trip and rejection") {
    std::mt19937_64 rng(9);
    const BlockedMatrix b = pack_b(oracle::random_dense(33, 20, DTypeKind::Fp16, rng));
    const auto bytes = serialize_blocked(b);
    CHECK(bytes.size() == 32 + b.storage().size());
    CHECK(std::memcmp(bytes.data(), "MXFB", 4) == 0);
    CHECK(bytes[4] == std::byte{1});
    CHECK(bytes[5] == std::byte{0});
    CHECK(deserialize_blocked(bytes) == b);

    std::stringstream stream;
    save_blocked(stream, b);
    CHECK(load_blocked(stream) == b);

    auto bad = bytes;
    bad[0] = std::byte{'X'};
    CHECK(code_of([&] { deserialize_blocked(bad); }) == ErrorCode::Format);
    std::vector<std::byte> truncated(bytes.begin(), bytes.end() - 1);
    CHECK(code_of([&] { deserialize_blocked(truncated); }) == ErrorCode::Format);
    auto huge = bytes;
    huge[15] = std::byte{0x7f};  // rows near 2^63
    CHECK(code_of([&] { deserialize_blocked(huge); }) == ErrorCode::Format);
  }
}
