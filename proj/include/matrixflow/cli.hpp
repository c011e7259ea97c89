// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "matrixflow/config.hpp"
#include "matrixflow/dtype.hpp"
#include "matrixflow/sysmodel.hpp"

namespace matrixflow {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSimulation = 3;

inline constexpr std::string_view kGemmSweepHeader =
    "size,mode,dtype,total_ns,baseline_ns,speedup,bytes_moved,energy_mj";

/// Square GEMM per size. Rows follow the order of `sizes`.
std::string gemm_sweep_csv(const std::vector<std::size_t>& sizes, DTypeKind dtype, AccessMode mode,
                           const SystemConfig& config, int jobs = 1);

/// One row per dtype at a fixed square size; gemm-sweep columns plus freq_hz, power_mw.
std::string dtype_sweep_csv(std::size_t size, AccessMode mode, const SystemConfig& config, int jobs = 1);

struct LinkPreset {
  int lanes = 16;
  double per_lane_gbps = 4.0;
};

/// 16x4.0 (64 Gb/s), 4x4.0 (16 Gb/s), 4x1.25 (5 Gb/s).
std::vector<LinkPreset> default_pcie_presets();

/// "16x4.0,4x1.25" -> presets; throws InvalidConfig on malformed input.
std::vector<LinkPreset> parse_link_presets(std::string_view text);

/// Columns lanes,per_lane_gbps,aggregate_gbps,mode,dtype,total_ns,speedup. Rows follow `presets`.
std::string pcie_sweep_csv(std::size_t size, DTypeKind dtype, AccessMode mode, const std::vector<LinkPreset>& presets,
                           const SystemConfig& config, int jobs = 1);

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace matrixflow
