// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <iosfwd>
#include <new>
#include <span>
#include <vector>

#include "matrixflow/dtype.hpp"
#include "matrixflow/error.hpp"

namespace matrixflow {

inline constexpr std::size_t kPageBytes = 4096;
inline constexpr int kDefaultArrayDim = 16;

/// Minimal allocator returning storage aligned to `Align` bytes.
template <typename T, std::size_t Align>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) noexcept {}

  template <typename U>
  struct rebind {
    using other = AlignedAllocator<U, Align>;
  };

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{Align}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{Align}); }

  template <typename U>
  friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U, Align>&) {
    return true;
  }
};

using PageStorage = std::vector<std::byte, AlignedAllocator<std::byte, kPageBytes>>;

/// A W x L tile that fills exactly one page.
struct BlockGeometry {
  int w = kDefaultArrayDim;  // rows per block, the array dimension
  int l = 0;                 // columns per block
  std::size_t page_bytes = kPageBytes;

  std::size_t elements() const { return static_cast<std::size_t>(w) * static_cast<std::size_t>(l); }
  friend bool operator==(const BlockGeometry&, const BlockGeometry&) = default;
};

/// L = 4096 / (W * byte_width). Throws NonDivisiblePage when that is not exact.
BlockGeometry block_geometry(DTypeKind dtype, int w = kDefaultArrayDim);

enum class Layout : std::uint8_t {
  ARowBand = 0,       // block (i,k): rows [iW,(i+1)W) x cols [kL,(k+1)L), row-major in the page
  BRestructured = 1,  // block (j,k): rows [kL,(k+1)L) x cols [jW,(j+1)W), column-major in the page
};

/// Row-major matrix of raw elements.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, DTypeKind dtype);

  template <typename T>
  static DenseMatrix from_values(std::size_t rows, std::size_t cols, DTypeKind dtype,
                                 std::span<const T> values) {
    DenseMatrix m(rows, cols, dtype);
    if (sizeof(T) != static_cast<std::size_t>(byte_width(dtype)) || values.size() != rows * cols) {
      throw Error(ErrorCode::ShapeMismatch, "value count or element size does not match matrix");
    }
    std::memcpy(m.data_.data(), values.data(), m.data_.size());
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  DTypeKind dtype() const { return dtype_; }
  int elem_bytes() const { return byte_width(dtype_); }

  std::span<std::byte> bytes() { return data_; }
  std::span<const std::byte> bytes() const { return data_; }

  template <typename T>
  T at(std::size_t r, std::size_t c) const {
    T v;
    std::memcpy(&v, data_.data() + (r * cols_ + c) * sizeof(T), sizeof(T));
    return v;
  }
  template <typename T>
  void set(std::size_t r, std::size_t c, T v) {
    std::memcpy(data_.data() + (r * cols_ + c) * sizeof(T), &v, sizeof(T));
  }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  DTypeKind dtype_ = DTypeKind::Int8;
  std::vector<std::byte> data_;
};

struct BlockGrid {
  std::size_t rows = 0;  // first block index (i for A, j for B)
  std::size_t cols = 0;  // second block index (k)
  friend bool operator==(const BlockGrid&, const BlockGrid&) = default;
};

/// A matrix stored as contiguous, page-aligned 4096-byte blocks.
class BlockedMatrix {
 public:
  /// Zero-filled matrix with the given logical shape.
  BlockedMatrix(std::size_t rows, std::size_t cols, DTypeKind dtype, Layout layout,
                int w = kDefaultArrayDim);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t padded_rows() const { return padded_rows_; }
  std::size_t padded_cols() const { return padded_cols_; }
  DTypeKind dtype() const { return dtype_; }
  Layout layout() const { return layout_; }
  const BlockGeometry& geometry() const { return geometry_; }
  const BlockGrid& grid() const { return grid_; }
  std::size_t block_count() const { return grid_.rows * grid_.cols; }

  std::span<const std::byte> block(std::size_t a, std::size_t b) const;
  std::span<std::byte> block(std::size_t a, std::size_t b);
  void set_block(std::size_t a, std::size_t b, std::span<const std::byte> page);

  /// Writes a W x W row-major result tile at tile coordinates (i, j).
  /// ARowBand only: the tile lands in page (i, j / (L/W)).
  void set_tile(std::size_t i, std::size_t j, std::span<const std::byte> tile);
  std::vector<std::byte> tile(std::size_t i, std::size_t j) const;

  std::span<const std::byte> storage() const { return storage_; }
  std::span<std::byte> storage() { return storage_; }

  friend bool operator==(const BlockedMatrix& x, const BlockedMatrix& y);

 private:
  std::size_t block_index(std::size_t a, std::size_t b) const;

  std::size_t rows_;
  std::size_t cols_;
  DTypeKind dtype_;
  Layout layout_;
  BlockGeometry geometry_;
  std::size_t padded_rows_;
  std::size_t padded_cols_;
  BlockGrid grid_;
  PageStorage storage_;
};

BlockedMatrix pack_a(const DenseMatrix& dense, int w = kDefaultArrayDim);
BlockedMatrix pack_b(const DenseMatrix& dense, int w = kDefaultArrayDim);
DenseMatrix unpack(const BlockedMatrix& m);

inline std::span<const std::byte> get_block(const BlockedMatrix& m, std::size_t a, std::size_t b) {
  return m.block(a, b);
}
inline void set_block(BlockedMatrix& m, std::size_t a, std::size_t b, std::span<const std::byte> page) {
  m.set_block(a, b, page);
}

// Binary dump: 32-byte little-endian header followed by the raw pages.
//   0  magic "MXFB"     4  u16 version    6  u8 dtype      7  u8 layout
//   8  u64 rows         16 u64 cols       24 u32 block W   28 u32 reserved (0)
inline constexpr std::uint16_t kBlockedFormatVersion = 1;

void save_blocked(std::ostream& out, const BlockedMatrix& m);
BlockedMatrix load_blocked(std::istream& in);
std::vector<std::byte> serialize_blocked(const BlockedMatrix& m);
BlockedMatrix deserialize_blocked(std::span<const std::byte> bytes);

}  // namespace matrixflow
