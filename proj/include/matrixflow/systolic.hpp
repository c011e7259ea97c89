// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>

#include "matrixflow/block_layout.hpp"
#include "matrixflow/dtype.hpp"
#include "matrixflow/gemm.hpp"

namespace matrixflow {

/// Output-stationary W x W array. A row r is fed from the left skewed by r
/// cycles, B column c from the top skewed by c cycles; PE(r,c) sees the pair
/// (a[r][l], b[l][c]) at cycle l + r + c.
struct ArrayConfig {
  int dim = kDefaultArrayDim;
  int drain_cycles = 1;  // result hand-off into buffer C after the last MAC

  friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

/// L + 2(W-1) + drain_cycles: L streaming beats plus skew fill on both edges.
std::int64_t sa_cycles(std::int64_t l, const ArrayConfig& config = {});

struct BlockResult {
  std::int64_t cycles = 0;
};

/// Cycle-stepped functional model of one block op. Accumulates into `acc`
/// exactly as multi_acc would and reports the cycles the emulation took.
BlockResult sa_compute_block(std::span<const std::byte> a_block, std::span<const std::byte> b_block,
                             AccTile& acc, const ArrayConfig& config = {});

/// Energy in mJ of `cycles` array cycles at the dtype's clock and power.
double block_energy(const DType& dtype, std::int64_t cycles);

/// Wall time of `cycles` array cycles, in integer picoseconds (rounded to nearest).
std::int64_t cycles_to_ps(std::int64_t cycles, double freq_hz);

}  // namespace matrixflow
