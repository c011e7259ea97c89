// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/gemm.hpp"

#include <algorithm>
#include <string>
#include <thread>

namespace matrixflow {

namespace {

template <DTypeKind K>
using Storage = typename ElementTraits<K>::storage_type;

template <DTypeKind K>
const Storage<K>* elems(std::span<const std::byte> bytes) {
  return reinterpret_cast<const Storage<K>*>(bytes.data());
}

template <DTypeKind K>
auto acc_span(AccTile& acc) {
  if constexpr (is_integer(K)) {
    return acc.ints();
  } else {
    return acc.floats();
  }
}

template <DTypeKind K>
auto acc_span(const AccTile& acc) {
  if constexpr (is_integer(K)) {
    return acc.ints();
  } else {
    return acc.floats();
  }
}

template <DTypeKind K>
void multi_acc_impl(std::span<const std::byte> a_block, std::span<const std::byte> b_block, std::size_t w,
                    std::size_t l, AccTile& acc) {
  using Traits = ElementTraits<K>;
  const Storage<K>* a = elems<K>(a_block);
  const Storage<K>* b = elems<K>(b_block);
  auto out = acc_span<K>(acc);
  for (std::size_t r = 0; r < w; ++r) {
    const Storage<K>* a_row = a + r * l;
    for (std::size_t c = 0; c < w; ++c) {
      const Storage<K>* b_col = b + c * l;  // column c of the tile is contiguous
      auto sum = out[r * w + c];
      for (std::size_t i = 0; i < l; ++i) {
        sum = Traits::mac(sum, a_row[i], b_col[i]);
      }
      out[r * w + c] = sum;
    }
  }
}

}  // namespace

AccTile::AccTile(DTypeKind dtype, int w) : dtype_(dtype), w_(w) {
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(w);
  if (is_integer(dtype)) {
    acc_ = std::vector<std::int32_t>(n, 0);
  } else {
    acc_ = std::vector<float>(n, 0.0f);
  }
}

void AccTile::clear() {
  std::visit([](auto& v) { std::ranges::fill(v, 0); }, acc_);
}

std::vector<std::byte> AccTile::narrow() const {
  return visit_dtype(dtype_, [&]<DTypeKind K>() {
    using Traits = ElementTraits<K>;
    const auto src = acc_span<K>(*this);
    std::vector<std::byte> out(src.size() * sizeof(Storage<K>));
    for (std::size_t i = 0; i < src.size(); ++i) {
      const Storage<K> v = Traits::narrow(src[i]);
      std::memcpy(out.data() + i * sizeof(v), &v, sizeof(v));
    }
    return out;
  });
}

DenseMatrix naive_gemm(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "A is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                              " but B is " + std::to_string(b.rows()) + "x" +
                                              std::to_string(b.cols()));
  }
  if (a.dtype() != b.dtype()) {
    throw Error(ErrorCode::DTypeMismatch, "operands have different dtypes");
  }
  DenseMatrix c(a.rows(), b.cols(), a.dtype());
  visit_dtype(a.dtype(), [&]<DTypeKind K>() {
    using Traits = ElementTraits<K>;
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < b.cols(); ++j) {
        typename Traits::acc_type acc{};
        for (std::size_t k = 0; k < a.cols(); ++k) {
          acc = Traits::mac(acc, a.at<Storage<K>>(i, k), b.at<Storage<K>>(k, j));
        }
        c.set<Storage<K>>(i, j, Traits::narrow(acc));
      }
    }
  });
  return c;
}

void multi_acc(std::span<const std::byte> a_block, std::span<const std::byte> b_block,
               const BlockGeometry& geometry, AccTile& acc) {
  const auto w = static_cast<std::size_t>(geometry.w);
  const auto l = static_cast<std::size_t>(geometry.l);
  const auto need = w * l * static_cast<std::size_t>(byte_width(acc.dtype()));
  if (acc.dim() != geometry.w || a_block.size() != need || b_block.size() != need) {
    throw Error(ErrorCode::GeometryMismatch, "blocks or accumulator do not match the W x L geometry");
  }
  visit_dtype(acc.dtype(), [&]<DTypeKind K>() { multi_acc_impl<K>(a_block, b_block, w, l, acc); });
}

void check_operands(const BlockedMatrix& a, const BlockedMatrix& b) {
  if (a.layout() != Layout::ARowBand || b.layout() != Layout::BRestructured) {
    throw Error(ErrorCode::LayoutMismatch, "A must be ARowBand and B must be BRestructured");
  }
  if (a.dtype() != b.dtype()) {
    throw Error(ErrorCode::DTypeMismatch, "operands have different dtypes");
  }
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "A has " + std::to_string(a.cols()) + " columns but B has " +
                                              std::to_string(b.rows()) + " rows");
  }
  if (a.geometry() != b.geometry()) {
    throw Error(ErrorCode::GeometryMismatch, "operands use different block geometries");
  }
}

BlockedMatrix block_matrix_multiply(const BlockedMatrix& a, const BlockedMatrix& b, const GemmOptions& options) {
  check_operands(a, b);
  const BlockGeometry& geo = a.geometry();
  BlockedMatrix c(a.rows(), b.cols(), a.dtype(), Layout::ARowBand, geo.w);

  const std::size_t m_tiles = a.grid().rows;
  const std::size_t n_tiles = b.grid().rows;
  const std::size_t k_blocks = a.grid().cols;

  // Each (i, j) tile is independent; threads own disjoint row bands, so the
  // pages they write never overlap and the result is schedule-independent.
  auto run_bands = [&](std::size_t first, std::size_t stride) {
    AccTile acc(a.dtype(), geo.w);
    for (std::size_t i = first; i < m_tiles; i += stride) {
      for (std::size_t j = 0; j < n_tiles; ++j) {
        acc.clear();
        for (std::size_t k = 0; k < k_blocks; ++k) {
          multi_acc(a.block(i, k), b.block(j, k), geo, acc);
        }
        c.set_tile(i, j, acc.narrow());
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(m_tiles, 1));
  if (threads == 1) {
    run_bands(0, 1);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(run_bands, t, threads);
    }
  }
  return c;
}

}  // namespace matrixflow
