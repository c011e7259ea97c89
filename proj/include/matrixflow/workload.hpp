// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matrixflow/config.hpp"
#include "matrixflow/engine.hpp"
#include "matrixflow/gemm.hpp"

namespace matrixflow {

struct TransformerConfig {
  std::string name;
  int num_layers = 1;
  int hidden = 1;
  int heads = 1;
  int ff_dim = 4;
  int seq_len = 1;
  DTypeKind dtype = DTypeKind::Int32;

  int head_dim() const { return hidden / heads; }
  friend bool operator==(const TransformerConfig&, const TransformerConfig&) = default;
};

/// Throws InvalidConfig unless every field is >= 1 and hidden % heads == 0.
void validate(const TransformerConfig& config);

enum class GemmLabel : std::uint8_t { QKV, AttnScores, AttnContext, OutProj, FF1, FF2 };
enum class CpuLabel : std::uint8_t { Softmax, LayerNorm, Activation, Transpose, Pack };

std::string_view label_name(GemmLabel label);
std::string_view label_name(CpuLabel label);

struct GemmTask {
  GemmLabel label = GemmLabel::QKV;
  GemmShape shape;
  int count = 1;              // instances per layer
  bool b_is_weight = true;    // weights are packed once at setup
};

/// Element counts of the CPU-side layers of one transformer layer.
struct NonGemmWork {
  std::uint64_t softmax = 0;
  std::uint64_t layernorm = 0;
  std::uint64_t activation = 0;
  std::uint64_t transpose = 0;
};

struct LayerPlan {
  std::vector<GemmTask> gemms;  // in execution order
  NonGemmWork non_gemm;
  int num_layers = 1;

  std::uint64_t gemm_macs_per_layer() const;
  std::uint64_t total_gemm_macs() const { return gemm_macs_per_layer() * static_cast<std::uint64_t>(num_layers); }
};

LayerPlan expand(const TransformerConfig& config);

/// bert-medium/base/large, vit-base/large/huge.
const std::vector<TransformerConfig>& builtin_configs();
TransformerConfig lookup_model(std::string_view name);  // throws UnknownModel

nlohmann::json model_table_to_json();

struct BreakdownRow {
  std::string label;
  Category category = Category::GemmCompute;
  Picos time = 0;
  double percent = 0.0;
};

struct TransformerReport {
  TransformerConfig model;
  AccessMode mode = AccessMode::DC;
  bool accelerated = true;
  SimReport total;
  std::map<std::string, CategoryTimes> per_label;  // label -> category times
  Picos gemm_time = 0;     // wall time of all GEMM work (offloaded runs or CPU loops)
  Picos setup_time = 0;    // one-time weight packing, excluded from total
  Picos baseline_time = 0;
  double speedup = 0.0;

  std::vector<BreakdownRow> breakdown() const;  // percent of total.total, sums to 100
  Picos label_time(std::string_view label) const;
};

/// Every layer on the single-thread CPU cost model.
TransformerReport run_transformer_baseline(const TransformerConfig& model, const CpuCostModel& cpu);

/// GEMMs offloaded one engine run per task instance; CPU layers and activation
/// packing on the cost model. Speedup is against run_transformer_baseline.
TransformerReport run_transformer(const TransformerConfig& model, const SystemConfig& config);

nlohmann::json transformer_report_to_json(const TransformerReport& report);

/// RFC-4180 CSV with header "label,category,ns,percent".
std::string breakdown_csv(const TransformerReport& report);

}  // namespace matrixflow
