// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "matrixflow/block_layout.hpp"

namespace matrixflow {

struct GemmShape {
  std::size_t m = 1;
  std::size_t n = 1;
  std::size_t k = 1;

  std::uint64_t macs() const { return static_cast<std::uint64_t>(m) * n * k; }
  friend bool operator==(const GemmShape&, const GemmShape&) = default;
};

/// W x W widened accumulators of one output tile (int32 for integer kinds,
/// fp32 for float kinds). Never narrowed between k-blocks.
class AccTile {
 public:
  AccTile(DTypeKind dtype, int w);

  DTypeKind dtype() const { return dtype_; }
  int dim() const { return w_; }

  std::span<std::int32_t> ints() { return std::get<std::vector<std::int32_t>>(acc_); }
  std::span<const std::int32_t> ints() const { return std::get<std::vector<std::int32_t>>(acc_); }
  std::span<float> floats() { return std::get<std::vector<float>>(acc_); }
  std::span<const float> floats() const { return std::get<std::vector<float>>(acc_); }

  void clear();

  /// Single cast to the output dtype; returns W*W row-major elements as bytes.
  std::vector<std::byte> narrow() const;

  friend bool operator==(const AccTile&, const AccTile&) = default;

 private:
  DTypeKind dtype_;
  int w_;
  std::variant<std::vector<std::int32_t>, std::vector<float>> acc_;
};

/// Dtype-semantics reference GEMM: C = cast(sum_k widen(A[i][k]) * widen(B[k][j])).
DenseMatrix naive_gemm(const DenseMatrix& a, const DenseMatrix& b);

/// acc[r][c] += sum_l a[r][l] * b[l][c] for an ARowBand page `a_block` and a
/// BRestructured page `b_block`.
void multi_acc(std::span<const std::byte> a_block, std::span<const std::byte> b_block,
               const BlockGeometry& geometry, AccTile& acc);

struct GemmOptions {
  unsigned threads = 1;  // output row bands are split across threads
};

/// Blocked multiply over page blocks: i over M/W, j over N/W, k over K/L.
/// A must be ARowBand and B BRestructured with the same dtype and array dim.
BlockedMatrix block_matrix_multiply(const BlockedMatrix& a, const BlockedMatrix& b,
                                    const GemmOptions& options = {});

/// Checks operand compatibility, throwing ShapeMismatch/LayoutMismatch/DTypeMismatch.
void check_operands(const BlockedMatrix& a, const BlockedMatrix& b);

}  // namespace matrixflow
