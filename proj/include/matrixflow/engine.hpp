// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>

#include <json.hpp>

#include "matrixflow/block_layout.hpp"
#include "matrixflow/config.hpp"
#include "matrixflow/gemm.hpp"
#include "matrixflow/sysmodel.hpp"

namespace matrixflow {

enum class Category : std::uint8_t { GemmCompute, DataTransfer, Control, NonGemmCpu };

std::string_view category_name(Category category);

struct CategoryTimes {
  Picos gemm_compute = 0;
  Picos data_transfer = 0;
  Picos control = 0;
  Picos non_gemm_cpu = 0;

  Picos& operator[](Category c);
  Picos operator[](Category c) const;
  Picos sum() const { return gemm_compute + data_transfer + control + non_gemm_cpu; }
  CategoryTimes& operator+=(const CategoryTimes& other);
  friend bool operator==(const CategoryTimes&, const CategoryTimes&) = default;
};

struct SimReport {
  Picos total = 0;
  CategoryTimes category;
  std::uint64_t bytes_moved = 0;
  double energy_mj = 0.0;
  double speedup_vs_baseline = 0.0;

  // detail beyond the headline fields
  TransferLedger ledger;
  std::uint64_t block_ops = 0;   // MultiAcc steps executed on the array
  std::int64_t array_cycles = 0;
  Picos transfer_busy = 0;       // sum of all DMA durations (control + data)
  Picos compute_busy = 0;        // sum of all array busy intervals

  SimReport& operator+=(const SimReport& other);
  friend bool operator==(const SimReport&, const SimReport&) = default;
};

/// JSON with fields total_ns, category_ns{gemm_compute,data_transfer,control,non_gemm_cpu},
/// bytes_moved, energy_mj, speedup_vs_baseline, plus a "ledger" object.
nlohmann::json report_to_json(const SimReport& report);

/// Where the three operands live in simulated physical memory.
struct GemmPlacement {
  std::uint64_t a_base = 0;
  std::uint64_t b_base = 0;
  std::uint64_t c_base = 0;
};

/// Timing of one offloaded GEMM on an existing memory system (timing does not
/// depend on element values). Shape is the logical shape; padding follows the
/// dtype's block geometry.
SimReport time_gemm(const GemmShape& shape, DTypeKind dtype, const SystemConfig& config, MemorySystem& memory,
                    const GemmPlacement& placement);

/// Fresh memory system, operands placed back to back; in DC mode the CPU has
/// just packed A and B, so their lines start in the LLC.
SimReport time_gemm(const GemmShape& shape, DTypeKind dtype, const SystemConfig& config);

/// Functional result plus timing report. C is bit-identical to block_matrix_multiply.
std::pair<BlockedMatrix, SimReport> run_gemm(const BlockedMatrix& a, const BlockedMatrix& b,
                                             const SystemConfig& config);

/// Single-thread loop GEMM on the CPU cost model.
Picos run_baseline_gemm(const GemmShape& shape, DTypeKind dtype, const CpuCostModel& cpu);

double speedup(const SimReport& report, Picos baseline);

/// Bytes of a blocked operand (whole pages).
std::size_t blocked_bytes(std::size_t rows, std::size_t cols, DTypeKind dtype, Layout layout, int w);

}  // namespace matrixflow
