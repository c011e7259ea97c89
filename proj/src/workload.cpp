// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/workload.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include "matrixflow/format.hpp"

namespace matrixflow {

namespace {

constexpr std::array kGemmLabels = {GemmLabel::QKV,     GemmLabel::AttnScores, GemmLabel::AttnContext,
                                    GemmLabel::OutProj, GemmLabel::FF1,        GemmLabel::FF2};
constexpr std::array kCpuLabels = {CpuLabel::Softmax, CpuLabel::LayerNorm, CpuLabel::Activation,
                                   CpuLabel::Transpose, CpuLabel::Pack};
constexpr std::array kCategories = {Category::GemmCompute, Category::DataTransfer, Category::Control,
                                    Category::NonGemmCpu};

std::uint64_t u64(int v) { return static_cast<std::uint64_t>(v); }
std::size_t sz(int v) { return static_cast<std::size_t>(v); }

Picos cpu_elements(const CpuCostModel& cpu, std::uint64_t elements, double cycles_per_element) {
  return cpu.cycles_to_ps(static_cast<double>(elements) * cycles_per_element);
}

}  // namespace

std::string_view label_name(GemmLabel label) {
  switch (label) {
    case GemmLabel::QKV: return "QKV";
    case GemmLabel::AttnScores: return "AttnScores";
    case GemmLabel::AttnContext: return "AttnContext";
    case GemmLabel::OutProj: return "OutProj";
    case GemmLabel::FF1: return "FF1";
    case GemmLabel::FF2: return "FF2";
  }
  return "?";
}

std::string_view label_name(CpuLabel label) {
  switch (label) {
    case CpuLabel::Softmax: return "Softmax";
    case CpuLabel::LayerNorm: return "LayerNorm";
    case CpuLabel::Activation: return "Activation";
    case CpuLabel::Transpose: return "Transpose";
    case CpuLabel::Pack: return "Pack";
  }
  return "?";
}

void validate(const TransformerConfig& c) {
  if (c.num_layers < 1 || c.hidden < 1 || c.heads < 1 || c.ff_dim < 1 || c.seq_len < 1) {
    throw Error(ErrorCode::InvalidConfig, "transformer fields must all be >= 1");
  }
  if (c.hidden % c.heads != 0) {
    throw Error(ErrorCode::InvalidConfig, "hidden size must be divisible by the head count");
  }
}

std::uint64_t LayerPlan::gemm_macs_per_layer() const {
  std::uint64_t total = 0;
  for (const GemmTask& t : gemms) {
    total += t.shape.macs() * static_cast<std::uint64_t>(t.count);
  }
  return total;
}

LayerPlan expand(const TransformerConfig& c) {
  validate(c);
  const std::size_t s = sz(c.seq_len);
  const std::size_t h = sz(c.hidden);
  const std::size_t d = sz(c.head_dim());
  const std::size_t f = sz(c.ff_dim);

  LayerPlan plan;
  plan.num_layers = c.num_layers;
  plan.gemms = {
      {GemmLabel::QKV, {s, h, h}, 3, true},
      {GemmLabel::AttnScores, {s, s, d}, c.heads, false},
      {GemmLabel::AttnContext, {s, d, s}, c.heads, false},
      {GemmLabel::OutProj, {s, h, h}, 1, true},
      {GemmLabel::FF1, {s, f, h}, 1, true},
      {GemmLabel::FF2, {s, h, f}, 1, true},
  };
  plan.non_gemm.softmax = u64(c.heads) * s * s;
  plan.non_gemm.layernorm = 2 * s * h;
  plan.non_gemm.activation = s * f;
  plan.non_gemm.transpose = u64(c.heads) * s * d;  // K^T per head
  return plan;
}

const std::vector<TransformerConfig>& builtin_configs() {
  static const std::vector<TransformerConfig> table = {
      {"bert-medium", 8, 512, 8, 2048, 128, DTypeKind::Int32},
      {"bert-base", 12, 768, 12, 3072, 128, DTypeKind::Int32},
      {"bert-large", 24, 1024, 16, 4096, 128, DTypeKind::Int32},
      // 196 patches + class token
      {"vit-base", 12, 768, 12, 3072, 197, DTypeKind::Int32},
      {"vit-large", 24, 1024, 16, 4096, 197, DTypeKind::Int32},
      {"vit-huge", 32, 1280, 16, 5120, 197, DTypeKind::Int32},
  };
  return table;
}

TransformerConfig lookup_model(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (const TransformerConfig& c : builtin_configs()) {
    if (c.name == lower) return c;
  }
  throw Error(ErrorCode::UnknownModel, "no builtin model named '" + std::string(name) + "'");
}

nlohmann::json model_table_to_json() {
  nlohmann::json out = nlohmann::json::array();
  for (const TransformerConfig& c : builtin_configs()) {
    out.push_back({{"name", c.name},
                   {"num_layers", c.num_layers},
                   {"hidden", c.hidden},
                   {"heads", c.heads},
                   {"ff_dim", c.ff_dim},
                   {"seq_len", c.seq_len}});
  }
  return out;
}

Picos TransformerReport::label_time(std::string_view label) const {
  auto it = per_label.find(std::string(label));
  return it == per_label.end() ? 0 : it->second.sum();
}

std::vector<BreakdownRow> TransformerReport::breakdown() const {
  std::vector<std::string> order;
  for (GemmLabel l : kGemmLabels) order.emplace_back(label_name(l));
  for (CpuLabel l : kCpuLabels) order.emplace_back(label_name(l));

  std::vector<BreakdownRow> rows;
  for (const std::string& label : order) {
    auto it = per_label.find(label);
    if (it == per_label.end()) continue;
    for (Category cat : kCategories) {
      const Picos t = it->second[cat];
      if (t == 0) continue;
      const double pct = total.total > 0 ? 100.0 * static_cast<double>(t) / static_cast<double>(total.total) : 0.0;
      rows.push_back({label, cat, t, pct});
    }
  }
  return rows;
}

namespace {

void charge_cpu(TransformerReport& r, CpuLabel label, Picos t) {
  r.total.total += t;
  r.total.category.non_gemm_cpu += t;
  r.per_label[std::string(label_name(label))].non_gemm_cpu += t;
}

void charge_layer_cpu_work(TransformerReport& r, const NonGemmWork& w, const CpuCostModel& cpu) {
  charge_cpu(r, CpuLabel::Transpose, cpu_elements(cpu, w.transpose, cpu.transpose_cycles_per_element));
  charge_cpu(r, CpuLabel::Softmax, cpu_elements(cpu, w.softmax, cpu.softmax_cycles_per_element));
  charge_cpu(r, CpuLabel::LayerNorm, cpu_elements(cpu, w.layernorm, cpu.layernorm_cycles_per_element));
  charge_cpu(r, CpuLabel::Activation, cpu_elements(cpu, w.activation, cpu.activation_cycles_per_element));
}

}  // namespace

TransformerReport run_transformer_baseline(const TransformerConfig& model, const CpuCostModel& cpu) {
  validate(cpu);
  const LayerPlan plan = expand(model);
  TransformerReport r;
  r.model = model;
  r.accelerated = false;
  for (int layer = 0; layer < plan.num_layers; ++layer) {
    for (const GemmTask& task : plan.gemms) {
      const Picos t = run_baseline_gemm(task.shape, model.dtype, cpu) * task.count;
      r.total.total += t;
      r.total.category.gemm_compute += t;
      r.per_label[std::string(label_name(task.label))].gemm_compute += t;
      r.gemm_time += t;
    }
    charge_layer_cpu_work(r, plan.non_gemm, cpu);
  }
  r.baseline_time = r.total.total;
  r.speedup = 1.0;
  r.total.speedup_vs_baseline = 1.0;
  return r;
}

TransformerReport run_transformer(const TransformerConfig& model, const SystemConfig& config) {
  validate(config);
  const LayerPlan plan = expand(model);
  const DTypeKind dtype = model.dtype;
  const int w = config.array.dim;
  const CpuCostModel& cpu = config.cpu;

  TransformerReport r;
  r.model = model;
  r.mode = config.mode;
  r.accelerated = true;

  MemorySystem memory(config.link, config.memory, config.smmu, config.mode);

  // Weights are packed once per model; that work is reported separately.
  std::vector<std::vector<std::uint64_t>> weight_base(sz(plan.num_layers));
  for (int layer = 0; layer < plan.num_layers; ++layer) {
    for (const GemmTask& task : plan.gemms) {
      if (!task.b_is_weight) continue;
      for (int n = 0; n < task.count; ++n) {
        const std::size_t bytes = blocked_bytes(task.shape.k, task.shape.n, dtype, Layout::BRestructured, w);
        weight_base[sz(layer)].push_back(memory.allocate(bytes));
        r.setup_time += cpu_elements(cpu, task.shape.k * task.shape.n, cpu.pack_cycles_per_element);
      }
    }
  }

  for (int layer = 0; layer < plan.num_layers; ++layer) {
    std::size_t next_weight = 0;
    for (const GemmTask& task : plan.gemms) {
      if (task.label == GemmLabel::AttnScores) {
        // K^T for every head before the score GEMMs, softmax right after
        charge_cpu(r, CpuLabel::Transpose,
                   cpu_elements(cpu, plan.non_gemm.transpose, cpu.transpose_cycles_per_element));
      }
      for (int n = 0; n < task.count; ++n) {
        const GemmShape& s = task.shape;
        GemmPlacement place;
        const std::size_t a_bytes = blocked_bytes(s.m, s.k, dtype, Layout::ARowBand, w);
        place.a_base = memory.allocate(a_bytes);
        memory.cpu_write(place.a_base, a_bytes);
        std::uint64_t packed = s.m * s.k;
        if (task.b_is_weight) {
          place.b_base = weight_base[sz(layer)][next_weight++];
        } else {
          const std::size_t b_bytes = blocked_bytes(s.k, s.n, dtype, Layout::BRestructured, w);
          place.b_base = memory.allocate(b_bytes);
          memory.cpu_write(place.b_base, b_bytes);
          packed += s.k * s.n;
        }
        place.c_base = memory.allocate(blocked_bytes(s.m, s.n, dtype, Layout::ARowBand, w));
        charge_cpu(r, CpuLabel::Pack, cpu_elements(cpu, packed, cpu.pack_cycles_per_element));

        const SimReport g = time_gemm(s, dtype, config, memory, place);
        r.total += g;
        r.gemm_time += g.total;
        r.per_label[std::string(label_name(task.label))] += g.category;
      }
      if (task.label == GemmLabel::AttnScores) {
        charge_cpu(r, CpuLabel::Softmax, cpu_elements(cpu, plan.non_gemm.softmax, cpu.softmax_cycles_per_element));
      } else if (task.label == GemmLabel::OutProj || task.label == GemmLabel::FF2) {
        charge_cpu(r, CpuLabel::LayerNorm,
                   cpu_elements(cpu, plan.non_gemm.layernorm / 2, cpu.layernorm_cycles_per_element));
      } else if (task.label == GemmLabel::FF1) {
        charge_cpu(r, CpuLabel::Activation,
                   cpu_elements(cpu, plan.non_gemm.activation, cpu.activation_cycles_per_element));
      }
    }
  }

  r.baseline_time = run_transformer_baseline(model, cpu).total.total;
  r.speedup = speedup(r.total, r.baseline_time);
  r.total.speedup_vs_baseline = r.speedup;
  return r;
}

nlohmann::json transformer_report_to_json(const TransformerReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const BreakdownRow& row : r.breakdown()) {
    rows.push_back({{"label", row.label},
                    {"category", std::string(category_name(row.category))},
                    {"ns", ps_to_ns(row.time)},
                    {"percent", row.percent}});
  }
  return {
      {"model",
       {{"name", r.model.name},
        {"num_layers", r.model.num_layers},
        {"hidden", r.model.hidden},
        {"heads", r.model.heads},
        {"ff_dim", r.model.ff_dim},
        {"seq_len", r.model.seq_len},
        {"dtype", std::string(dtype_name(r.model.dtype))}}},
      {"accelerated", r.accelerated},
      {"mode", std::string(access_mode_name(r.mode))},
      {"report", report_to_json(r.total)},
      {"gemm_ns", ps_to_ns(r.gemm_time)},
      {"setup_ns", ps_to_ns(r.setup_time)},
      {"baseline_ns", ps_to_ns(r.baseline_time)},
      {"speedup", r.speedup},
      {"breakdown", rows},
  };
}

std::string breakdown_csv(const TransformerReport& r) {
  std::ostringstream out;
  out << "label,category,ns,percent\n";
  for (const BreakdownRow& row : r.breakdown()) {
    out << csv_field(row.label) << ',' << category_name(row.category) << ',' << format_ns(row.time) << ','
        << format_double(row.percent) << '\n';
  }
  return out.str();
}

}  // namespace matrixflow
