// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/block_layout.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

namespace matrixflow {

namespace {

std::size_t round_up(std::size_t value, std::size_t multiple) {
  return (value + multiple - 1) / multiple * multiple;
}

void require_nonempty(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) {
    throw Error(ErrorCode::EmptyMatrix, "matrix dimensions must be at least 1x1");
  }
}

}  // namespace

BlockGeometry block_geometry(DTypeKind dtype, int w) {
  if (w <= 0) {
    throw Error(ErrorCode::NonDivisiblePage, "array dimension must be positive");
  }
  const std::size_t row_bytes = static_cast<std::size_t>(w) * static_cast<std::size_t>(byte_width(dtype));
  if (kPageBytes % row_bytes != 0) {
    throw Error(ErrorCode::NonDivisiblePage,
                "W=" + std::to_string(w) + " x " + std::to_string(byte_width(dtype)) +
                    " bytes does not divide the page");
  }
  return BlockGeometry{w, static_cast<int>(kPageBytes / row_bytes), kPageBytes};
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, DTypeKind dtype)
    : rows_(rows), cols_(cols), dtype_(dtype),
      data_(rows * cols * static_cast<std::size_t>(byte_width(dtype))) {}

BlockedMatrix::BlockedMatrix(std::size_t rows, std::size_t cols, DTypeKind dtype, Layout layout, int w)
    : rows_(rows), cols_(cols), dtype_(dtype), layout_(layout), geometry_(block_geometry(dtype, w)) {
  require_nonempty(rows, cols);
  const auto bw = static_cast<std::size_t>(geometry_.w);
  const auto bl = static_cast<std::size_t>(geometry_.l);
  if (layout == Layout::ARowBand) {
    padded_rows_ = round_up(rows, bw);
    padded_cols_ = round_up(cols, bl);
    grid_ = {padded_rows_ / bw, padded_cols_ / bl};
  } else {
    padded_rows_ = round_up(rows, bl);
    padded_cols_ = round_up(cols, bw);
    grid_ = {padded_cols_ / bw, padded_rows_ / bl};
  }
  storage_.assign(block_count() * kPageBytes, std::byte{0});
}

std::size_t BlockedMatrix::block_index(std::size_t a, std::size_t b) const {
  if (a >= grid_.rows || b >= grid_.cols) {
    throw Error(ErrorCode::IndexOutOfRange, "block (" + std::to_string(a) + "," + std::to_string(b) +
                                                ") outside grid " + std::to_string(grid_.rows) + "x" +
                                                std::to_string(grid_.cols));
  }
  return a * grid_.cols + b;
}

std::span<const std::byte> BlockedMatrix::block(std::size_t a, std::size_t b) const {
  return std::span<const std::byte>(storage_).subspan(block_index(a, b) * kPageBytes, kPageBytes);
}

std::span<std::byte> BlockedMatrix::block(std::size_t a, std::size_t b) {
  return std::span<std::byte>(storage_).subspan(block_index(a, b) * kPageBytes, kPageBytes);
}

void BlockedMatrix::set_block(std::size_t a, std::size_t b, std::span<const std::byte> page) {
  if (page.size() != kPageBytes) {
    throw Error(ErrorCode::BlockSizeMismatch,
                "block must be " + std::to_string(kPageBytes) + " bytes, got " + std::to_string(page.size()));
  }
  std::ranges::copy(page, block(a, b).begin());
}

void BlockedMatrix::set_tile(std::size_t i, std::size_t j, std::span<const std::byte> tile) {
  if (layout_ != Layout::ARowBand) {
    throw Error(ErrorCode::LayoutMismatch, "result tiles are only stored in ARowBand matrices");
  }
  const auto w = static_cast<std::size_t>(geometry_.w);
  const auto l = static_cast<std::size_t>(geometry_.l);
  const auto eb = static_cast<std::size_t>(byte_width(dtype_));
  if (tile.size() != w * w * eb) {
    throw Error(ErrorCode::BlockSizeMismatch, "result tile must be W x W elements");
  }
  const std::size_t tiles_per_page = l / w;
  auto page = block(i, j / tiles_per_page);
  const std::size_t col0 = (j % tiles_per_page) * w;
  for (std::size_t r = 0; r < w; ++r) {
    std::memcpy(page.data() + (r * l + col0) * eb, tile.data() + r * w * eb, w * eb);
  }
}

std::vector<std::byte> BlockedMatrix::tile(std::size_t i, std::size_t j) const {
  if (layout_ != Layout::ARowBand) {
    throw Error(ErrorCode::LayoutMismatch, "result tiles are only stored in ARowBand matrices");
  }
  const auto w = static_cast<std::size_t>(geometry_.w);
  const auto l = static_cast<std::size_t>(geometry_.l);
  const auto eb = static_cast<std::size_t>(byte_width(dtype_));
  const std::size_t tiles_per_page = l / w;
  auto page = block(i, j / tiles_per_page);
  const std::size_t col0 = (j % tiles_per_page) * w;
  std::vector<std::byte> out(w * w * eb);
  for (std::size_t r = 0; r < w; ++r) {
    std::memcpy(out.data() + r * w * eb, page.data() + (r * l + col0) * eb, w * eb);
  }
  return out;
}

bool operator==(const BlockedMatrix& x, const BlockedMatrix& y) {
  return x.rows_ == y.rows_ && x.cols_ == y.cols_ && x.dtype_ == y.dtype_ && x.layout_ == y.layout_ &&
         x.geometry_ == y.geometry_ && std::ranges::equal(x.storage_, y.storage_);
}

BlockedMatrix pack_a(const DenseMatrix& dense, int w) {
  BlockedMatrix m(dense.rows(), dense.cols(), dense.dtype(), Layout::ARowBand, w);
  const auto bw = static_cast<std::size_t>(m.geometry().w);
  const auto bl = static_cast<std::size_t>(m.geometry().l);
  const auto eb = static_cast<std::size_t>(dense.elem_bytes());
  const auto src = dense.bytes();
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    const std::size_t bi = r / bw;
    const std::size_t in_r = r % bw;
    for (std::size_t bk = 0; bk * bl < dense.cols(); ++bk) {
      const std::size_t c0 = bk * bl;
      const std::size_t n = std::min(bl, dense.cols() - c0);
      auto page = m.block(bi, bk);
      std::memcpy(page.data() + in_r * bl * eb, src.data() + (r * dense.cols() + c0) * eb, n * eb);
    }
  }
  return m;
}

BlockedMatrix pack_b(const DenseMatrix& dense, int w) {
  BlockedMatrix m(dense.rows(), dense.cols(), dense.dtype(), Layout::BRestructured, w);
  const auto bw = static_cast<std::size_t>(m.geometry().w);
  const auto bl = static_cast<std::size_t>(m.geometry().l);
  const auto eb = static_cast<std::size_t>(dense.elem_bytes());
  const auto src = dense.bytes();
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    const std::size_t bk = r / bl;
    const std::size_t in_l = r % bl;
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      auto page = m.block(c / bw, bk);
      const std::size_t in_c = c % bw;
      std::memcpy(page.data() + (in_c * bl + in_l) * eb, src.data() + (r * dense.cols() + c) * eb, eb);
    }
  }
  return m;
}

DenseMatrix unpack(const BlockedMatrix& m) {
  DenseMatrix dense(m.rows(), m.cols(), m.dtype());
  const auto bw = static_cast<std::size_t>(m.geometry().w);
  const auto bl = static_cast<std::size_t>(m.geometry().l);
  const auto eb = static_cast<std::size_t>(byte_width(m.dtype()));
  auto dst = dense.bytes();
  if (m.layout() == Layout::ARowBand) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t bk = 0; bk * bl < m.cols(); ++bk) {
        const std::size_t c0 = bk * bl;
        const std::size_t n = std::min(bl, m.cols() - c0);
        auto page = m.block(r / bw, bk);
        std::memcpy(dst.data() + (r * m.cols() + c0) * eb, page.data() + (r % bw) * bl * eb, n * eb);
      }
    }
  } else {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        auto page = m.block(c / bw, r / bl);
        std::memcpy(dst.data() + (r * m.cols() + c) * eb, page.data() + ((c % bw) * bl + r % bl) * eb, eb);
      }
    }
  }
  return dense;
}

// ---------------------------------------------------------------------------
// Binary format
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kHeaderBytes = 32;
constexpr char kMagic[4] = {'M', 'X', 'F', 'B'};

template <typename T>
void put_le(std::byte* dst, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    dst[i] = static_cast<std::byte>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xffu);
  }
}

template <typename T>
T get_le(const std::byte* src) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(src[i])) << (8 * i);
  }
  return static_cast<T>(v);
}

// Element payloads are stored little-endian; swap in place on big-endian hosts.
void to_little_endian(std::span<std::byte> payload, std::size_t elem_bytes) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t off = 0; off + elem_bytes <= payload.size(); off += elem_bytes) {
      std::reverse(payload.begin() + static_cast<std::ptrdiff_t>(off),
                   payload.begin() + static_cast<std::ptrdiff_t>(off + elem_bytes));
    }
  } else {
    (void)payload;
    (void)elem_bytes;
  }
}

}  // namespace

std::vector<std::byte> serialize_blocked(const BlockedMatrix& m) {
  std::vector<std::byte> out(kHeaderBytes + m.storage().size());
  std::memcpy(out.data(), kMagic, 4);
  put_le<std::uint16_t>(out.data() + 4, kBlockedFormatVersion);
  put_le<std::uint8_t>(out.data() + 6, static_cast<std::uint8_t>(m.dtype()));
  put_le<std::uint8_t>(out.data() + 7, static_cast<std::uint8_t>(m.layout()));
  put_le<std::uint64_t>(out.data() + 8, m.rows());
  put_le<std::uint64_t>(out.data() + 16, m.cols());
  put_le<std::uint32_t>(out.data() + 24, static_cast<std::uint32_t>(m.geometry().w));
  put_le<std::uint32_t>(out.data() + 28, 0u);
  std::ranges::copy(m.storage(), out.begin() + kHeaderBytes);
  to_little_endian(std::span(out).subspan(kHeaderBytes), static_cast<std::size_t>(byte_width(m.dtype())));
  return out;
}

BlockedMatrix deserialize_blocked(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw Error(ErrorCode::Format, "truncated header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::Format, "bad magic");
  }
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kBlockedFormatVersion) {
    throw Error(ErrorCode::Format, "unsupported version " + std::to_string(version));
  }
  const auto dtype_code = get_le<std::uint8_t>(bytes.data() + 6);
  const auto layout_code = get_le<std::uint8_t>(bytes.data() + 7);
  if (dtype_code > static_cast<std::uint8_t>(DTypeKind::Fp32) || layout_code > 1) {
    throw Error(ErrorCode::Format, "bad dtype or layout code");
  }
  const auto rows = get_le<std::uint64_t>(bytes.data() + 8);
  const auto cols = get_le<std::uint64_t>(bytes.data() + 16);
  const auto w = get_le<std::uint32_t>(bytes.data() + 24);
  if (w == 0 || w > kPageBytes) {
    throw Error(ErrorCode::Format, "bad block width");
  }
  const auto dtype = static_cast<DTypeKind>(dtype_code);
  const auto layout = static_cast<Layout>(layout_code);
  if (rows == 0 || cols == 0 || kPageBytes % (w * static_cast<std::size_t>(byte_width(dtype))) != 0) {
    throw Error(ErrorCode::Format, "bad dimensions or block width");
  }
  // check the page count against the payload before allocating anything
  const std::uint64_t l = kPageBytes / (w * static_cast<std::uint64_t>(byte_width(dtype)));
  const std::uint64_t row_mult = layout == Layout::ARowBand ? w : l;
  const std::uint64_t col_mult = layout == Layout::ARowBand ? l : w;
  const std::uint64_t row_blocks = rows / row_mult + (rows % row_mult != 0);
  const std::uint64_t col_blocks = cols / col_mult + (cols % col_mult != 0);
  const std::uint64_t payload_pages = (bytes.size() - kHeaderBytes) / kPageBytes;
  if ((bytes.size() - kHeaderBytes) % kPageBytes != 0 || row_blocks > payload_pages ||
      col_blocks > payload_pages || row_blocks * col_blocks != payload_pages) {
    throw Error(ErrorCode::Format, "payload size does not match header");
  }
  BlockedMatrix m(rows, cols, dtype, layout, static_cast<int>(w));
  std::ranges::copy(bytes.subspan(kHeaderBytes), m.storage().begin());
  to_little_endian(m.storage(), static_cast<std::size_t>(byte_width(m.dtype())));
  return m;
}

void save_blocked(std::ostream& out, const BlockedMatrix& m) {
  const auto bytes = serialize_blocked(m);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorCode::Io, "failed to write blocked matrix");
  }
}

BlockedMatrix load_blocked(std::istream& in) {
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_blocked(std::as_bytes(std::span(raw)));
}

}  // namespace matrixflow
