// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/systolic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace matrixflow {

namespace {

template <DTypeKind K>
struct PeLink {
  typename ElementTraits<K>::storage_type value{};
  bool valid = false;
};

template <DTypeKind K>
std::int64_t emulate(std::span<const std::byte> a_block, std::span<const std::byte> b_block, std::size_t w,
                     std::size_t l, AccTile& acc) {
  using Traits = ElementTraits<K>;
  using S = typename Traits::storage_type;
  const auto* a = reinterpret_cast<const S*>(a_block.data());
  const auto* b = reinterpret_cast<const S*>(b_block.data());

  std::vector<typename Traits::acc_type> psum(w * w);
  if constexpr (is_integer(K)) {
    std::ranges::copy(acc.ints(), psum.begin());
  } else {
    std::ranges::copy(acc.floats(), psum.begin());
  }

  // a_reg[r][c] holds the A operand currently at PE(r,c); likewise b_reg.
  std::vector<PeLink<K>> a_reg(w * w);
  std::vector<PeLink<K>> b_reg(w * w);
  const std::size_t total_macs = w * w * l;
  std::size_t macs = 0;
  std::int64_t t = 0;
  for (; macs < total_macs; ++t) {
    // operands move one PE right (A) and one PE down (B) per cycle
    for (std::size_t r = 0; r < w; ++r) {
      for (std::size_t c = w - 1; c > 0; --c) {
        a_reg[r * w + c] = a_reg[r * w + c - 1];
      }
      const std::int64_t idx = t - static_cast<std::int64_t>(r);
      a_reg[r * w] = (idx >= 0 && idx < static_cast<std::int64_t>(l))
                         ? PeLink<K>{a[r * l + static_cast<std::size_t>(idx)], true}
                         : PeLink<K>{};
    }
    for (std::size_t c = 0; c < w; ++c) {
      for (std::size_t r = w - 1; r > 0; --r) {
        b_reg[r * w + c] = b_reg[(r - 1) * w + c];
      }
      const std::int64_t idx = t - static_cast<std::int64_t>(c);
      b_reg[c] = (idx >= 0 && idx < static_cast<std::int64_t>(l))
                     ? PeLink<K>{b[c * l + static_cast<std::size_t>(idx)], true}
                     : PeLink<K>{};
    }
    for (std::size_t p = 0; p < w * w; ++p) {
      if (a_reg[p].valid && b_reg[p].valid) {
        psum[p] = Traits::mac(psum[p], a_reg[p].value, b_reg[p].value);
        ++macs;
      }
    }
  }

  if constexpr (is_integer(K)) {
    std::ranges::copy(psum, acc.ints().begin());
  } else {
    std::ranges::copy(psum, acc.floats().begin());
  }
  return t;
}

}  // namespace

std::int64_t sa_cycles(std::int64_t l, const ArrayConfig& config) {
  return l + 2 * (static_cast<std::int64_t>(config.dim) - 1) + config.drain_cycles;
}

BlockResult sa_compute_block(std::span<const std::byte> a_block, std::span<const std::byte> b_block,
                             AccTile& acc, const ArrayConfig& config) {
  const BlockGeometry geo = block_geometry(acc.dtype(), config.dim);
  const auto need = geo.elements() * static_cast<std::size_t>(byte_width(acc.dtype()));
  if (acc.dim() != config.dim || a_block.size() != need || b_block.size() != need) {
    throw Error(ErrorCode::GeometryMismatch, "blocks or accumulator do not match the array geometry");
  }
  const auto w = static_cast<std::size_t>(geo.w);
  const auto l = static_cast<std::size_t>(geo.l);
  const std::int64_t stream_cycles =
      visit_dtype(acc.dtype(), [&]<DTypeKind K>() { return emulate<K>(a_block, b_block, w, l, acc); });
  return BlockResult{stream_cycles + config.drain_cycles};
}

double block_energy(const DType& dtype, std::int64_t cycles) {
  // mW * s = mJ
  return dtype.array_power_mw * static_cast<double>(cycles) / dtype.array_freq_hz;
}

std::int64_t cycles_to_ps(std::int64_t cycles, double freq_hz) {
  return std::llround(static_cast<double>(cycles) * 1e12 / freq_hz);
}

}  // namespace matrixflow
