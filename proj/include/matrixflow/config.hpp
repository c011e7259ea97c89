// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "matrixflow/dtype.hpp"
#include "matrixflow/systolic.hpp"
#include "matrixflow/sysmodel.hpp"

namespace matrixflow {

/// Analytic single-thread CPU: loop GEMMs and the non-GEMM transformer layers.
struct CpuCostModel {
  double freq_hz = 1e9;
  // indexed by DTypeKind
  std::array<double, 5> cycles_per_mac = {4.0, 4.0, 4.0, 5.0, 5.0};
  double fp16_convert_cycles_per_element = 4.0;
  double softmax_cycles_per_element = 20.0;
  double layernorm_cycles_per_element = 12.0;
  double activation_cycles_per_element = 16.0;
  double transpose_cycles_per_element = 2.0;
  double pack_cycles_per_element = 2.0;  // dense -> blocked layout conversion

  double mac_cycles(DTypeKind kind) const { return cycles_per_mac[static_cast<std::size_t>(kind)]; }
  Picos cycles_to_ps(double cycles) const;
  friend bool operator==(const CpuCostModel&, const CpuCostModel&) = default;
};

void validate(const CpuCostModel& cpu);

struct EngineConfig {
  double command_ns = 200.0;  // CPU command per offloaded GEMM, charged to control
  bool double_buffer = true;  // A/B buffers ping-pong so fetch overlaps compute
  int channels = 1;           // accelerator channels sharing the link round-robin

  friend bool operator==(const EngineConfig&, const EngineConfig&) = default;
};

struct SystemConfig {
  ArrayConfig array;
  LinkConfig link;
  MemoryConfig memory;
  SmmuConfig smmu;
  AccessMode mode = AccessMode::DC;
  EngineConfig engine;
  CpuCostModel cpu;
  DTypeTable dtypes;

  friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

void validate(const SystemConfig& config);

/// JSON schema (every key optional, unknown keys rejected):
///   {"mode": "DC"|"DM", "channels": n,
///    "array":  {"dim", "drain_cycles"},
///    "link":   {"lanes", "gbps" (per lane), "eta", "base_latency_ns", "max_payload"},
///    "memory": {"llc_bytes", "line_bytes", "llc_ways", "llc_hit_ns", "dram_latency_ns", "dram_bw_bytes_per_ns"},
///    "smmu":   {"tlb_entries", "translate_ns"},
///    "engine": {"command_ns", "double_buffer"},
///    "cpu":    {"freq_hz", "cycles_per_mac": {"int8": c, ...}, "fp16_convert_cycles_per_element",
///               "softmax_cycles_per_element", "layernorm_cycles_per_element",
///               "activation_cycles_per_element", "transpose_cycles_per_element", "pack_cycles_per_element"},
///    "dtypes": [{"kind", "freq_hz", "power_mw", "area_mm2"}]}
/// Keys overlay the defaults. Errors report the JSON path (and line/column for syntax errors).
SystemConfig config_from_json(const nlohmann::json& j);
SystemConfig parse_config(std::string_view text);
SystemConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const SystemConfig& config);

nlohmann::json dtype_table_to_json(const DTypeTable& table);
DTypeTable dtype_table_from_json(const nlohmann::json& j);

}  // namespace matrixflow
