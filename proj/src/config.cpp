// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "matrixflow/block_layout.hpp"
#include "matrixflow/error.hpp"

namespace matrixflow {

using nlohmann::json;

Picos CpuCostModel::cycles_to_ps(double cycles) const { return std::llround(cycles * 1e12 / freq_hz); }

void validate(const CpuCostModel& cpu) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidConfig, std::string("cpu.") + name + " must be positive");
    }
  };
  positive(cpu.freq_hz, "freq_hz");
  for (DTypeKind kind : kAllDTypes) {
    positive(cpu.mac_cycles(kind), "cycles_per_mac");
  }
  positive(cpu.fp16_convert_cycles_per_element, "fp16_convert_cycles_per_element");
  positive(cpu.softmax_cycles_per_element, "softmax_cycles_per_element");
  positive(cpu.layernorm_cycles_per_element, "layernorm_cycles_per_element");
  positive(cpu.activation_cycles_per_element, "activation_cycles_per_element");
  positive(cpu.transpose_cycles_per_element, "transpose_cycles_per_element");
  positive(cpu.pack_cycles_per_element, "pack_cycles_per_element");
}

void validate(const SystemConfig& config) {
  if (config.array.dim < 1 || config.array.drain_cycles < 0) {
    throw Error(ErrorCode::InvalidConfig, "array.dim must be >= 1 and array.drain_cycles >= 0");
  }
  for (DTypeKind kind : kAllDTypes) {
    block_geometry(kind, config.array.dim);  // W must tile a page for every dtype
  }
  validate(config.link);
  validate(config.memory);
  validate(config.smmu);
  validate(config.cpu);
  if (config.engine.command_ns < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "engine.command_ns must be >= 0");
  }
  if (config.engine.channels < 1) {
    throw Error(ErrorCode::InvalidConfig, "channels must be >= 1");
  }
}

namespace {

/// Walks one JSON object, rejecting unknown keys and reporting typed errors
/// with their JSON path.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path, std::initializer_list<const char*> allowed)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      fail(path_.empty() ? "/" : path_, "expected an object");
    }
    for (const auto& [key, value] : j_.items()) {
      bool known = false;
      for (const char* name : allowed) {
        known = known || key == name;
      }
      if (!known) {
        fail(path_ + "/" + key, "unknown field");
      }
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const json& at(const char* key) const { return j_.at(key); }
  std::string child(const char* key) const { return path_ + "/" + key; }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) fail(child(key), "expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const char* key, Int& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail(child(key), "expected an integer");
    if (v.is_number_unsigned()) {
      out = static_cast<Int>(v.get<std::uint64_t>());
    } else {
      const auto raw = v.get<std::int64_t>();
      if (raw < 0 && std::is_unsigned_v<Int>) fail(child(key), "expected a non-negative integer");
      out = static_cast<Int>(raw);
    }
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail(child(key), "expected true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) fail(child(key), "expected a string");
    out = v.get<std::string>();
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& message) {
    throw Error(ErrorCode::InvalidConfig, "field " + path + ": " + message);
  }

 private:
  const json& j_;
  std::string path_;
};

DType dtype_entry_from_json(const json& j, const std::string& path) {
  ObjectReader r(j, path, {"kind", "freq_hz", "power_mw", "area_mm2"});
  std::string kind_text;
  r.string("kind", kind_text);
  if (kind_text.empty()) {
    ObjectReader::fail(r.child("kind"), "missing dtype kind");
  }
  DTypeKind kind;
  try {
    kind = parse_dtype(kind_text);
  } catch (const Error& e) {
    ObjectReader::fail(r.child("kind"), e.what());
  }
  DType entry = DType::of(kind);
  r.number("freq_hz", entry.array_freq_hz);
  r.number("power_mw", entry.array_power_mw);
  r.number("area_mm2", entry.array_area_mm2);
  return entry;
}

void apply_dtype_table(const json& j, const std::string& path, DTypeTable& table) {
  if (!j.is_array()) {
    ObjectReader::fail(path, "expected an array of dtype entries");
  }
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string entry_path = path + "/" + std::to_string(i);
    const DType entry = dtype_entry_from_json(j[i], entry_path);
    try {
      table.set(entry);
    } catch (const Error& e) {
      ObjectReader::fail(entry_path, e.what());
    }
  }
}

}  // namespace

DTypeTable dtype_table_from_json(const json& j) {
  DTypeTable table;
  apply_dtype_table(j, "", table);
  return table;
}

json dtype_table_to_json(const DTypeTable& table) {
  json out = json::array();
  for (DTypeKind kind : kAllDTypes) {
    const DType& d = table[kind];
    out.push_back({{"kind", std::string(dtype_name(kind))},
                   {"freq_hz", d.array_freq_hz},
                   {"power_mw", d.array_power_mw},
                   {"area_mm2", d.array_area_mm2}});
  }
  return out;
}

SystemConfig config_from_json(const json& j) {
  SystemConfig cfg;
  ObjectReader root(j, "", {"mode", "channels", "array", "link", "memory", "smmu", "engine", "cpu", "dtypes"});

  if (root.has("mode")) {
    std::string mode;
    root.string("mode", mode);
    try {
      cfg.mode = parse_access_mode(mode);
    } catch (const Error&) {
      ObjectReader::fail("/mode", "expected \"DC\" or \"DM\"");
    }
  }
  root.integer("channels", cfg.engine.channels);

  if (root.has("array")) {
    ObjectReader r(root.at("array"), "/array", {"dim", "drain_cycles"});
    r.integer("dim", cfg.array.dim);
    r.integer("drain_cycles", cfg.array.drain_cycles);
  }
  if (root.has("link")) {
    ObjectReader r(root.at("link"), "/link", {"lanes", "gbps", "eta", "base_latency_ns", "max_payload"});
    r.integer("lanes", cfg.link.lanes);
    r.number("gbps", cfg.link.per_lane_gbps);
    r.number("eta", cfg.link.efficiency);
    r.number("base_latency_ns", cfg.link.base_latency_ns);
    r.integer("max_payload", cfg.link.max_payload_bytes);
  }
  if (root.has("memory")) {
    ObjectReader r(root.at("memory"), "/memory",
                   {"llc_bytes", "line_bytes", "llc_ways", "llc_hit_ns", "dram_latency_ns", "dram_bw_bytes_per_ns"});
    r.integer("llc_bytes", cfg.memory.llc_bytes);
    r.integer("line_bytes", cfg.memory.line_bytes);
    r.integer("llc_ways", cfg.memory.llc_ways);
    r.number("llc_hit_ns", cfg.memory.llc_hit_ns);
    r.number("dram_latency_ns", cfg.memory.dram_latency_ns);
    r.number("dram_bw_bytes_per_ns", cfg.memory.dram_bytes_per_ns);
  }
  if (root.has("smmu")) {
    ObjectReader r(root.at("smmu"), "/smmu", {"tlb_entries", "translate_ns"});
    r.integer("tlb_entries", cfg.smmu.tlb_entries);
    r.number("translate_ns", cfg.smmu.translate_ns);
  }
  if (root.has("engine")) {
    ObjectReader r(root.at("engine"), "/engine", {"command_ns", "double_buffer"});
    r.number("command_ns", cfg.engine.command_ns);
    r.boolean("double_buffer", cfg.engine.double_buffer);
  }
  if (root.has("cpu")) {
    ObjectReader r(root.at("cpu"), "/cpu",
                   {"freq_hz", "cycles_per_mac", "fp16_convert_cycles_per_element", "softmax_cycles_per_element",
                    "layernorm_cycles_per_element", "activation_cycles_per_element",
                    "transpose_cycles_per_element", "pack_cycles_per_element"});
    r.number("freq_hz", cfg.cpu.freq_hz);
    if (r.has("cycles_per_mac")) {
      ObjectReader m(r.at("cycles_per_mac"), "/cpu/cycles_per_mac", {"int8", "int16", "int32", "fp16", "fp32"});
      for (DTypeKind kind : kAllDTypes) {
        const std::string name(dtype_name(kind));
        m.number(name.c_str(), cfg.cpu.cycles_per_mac[static_cast<std::size_t>(kind)]);
      }
    }
    r.number("fp16_convert_cycles_per_element", cfg.cpu.fp16_convert_cycles_per_element);
    r.number("softmax_cycles_per_element", cfg.cpu.softmax_cycles_per_element);
    r.number("layernorm_cycles_per_element", cfg.cpu.layernorm_cycles_per_element);
    r.number("activation_cycles_per_element", cfg.cpu.activation_cycles_per_element);
    r.number("transpose_cycles_per_element", cfg.cpu.transpose_cycles_per_element);
    r.number("pack_cycles_per_element", cfg.cpu.pack_cycles_per_element);
  }
  if (root.has("dtypes")) {
    apply_dtype_table(root.at("dtypes"), "/dtypes", cfg.dtypes);
  }

  validate(cfg);
  return cfg;
}

SystemConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // translate the byte offset into line:column
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorCode::ConfigParse,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + e.what());
  }
  return config_from_json(j);
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + std::string(e.what()));
  }
}

json config_to_json(const SystemConfig& c) {
  json cpm = json::object();
  for (DTypeKind kind : kAllDTypes) {
    cpm[std::string(dtype_name(kind))] = c.cpu.mac_cycles(kind);
  }
  return {
      {"mode", std::string(access_mode_name(c.mode))},
      {"channels", c.engine.channels},
      {"array", {{"dim", c.array.dim}, {"drain_cycles", c.array.drain_cycles}}},
      {"link",
       {{"lanes", c.link.lanes},
        {"gbps", c.link.per_lane_gbps},
        {"eta", c.link.efficiency},
        {"base_latency_ns", c.link.base_latency_ns},
        {"max_payload", c.link.max_payload_bytes}}},
      {"memory",
       {{"llc_bytes", c.memory.llc_bytes},
        {"line_bytes", c.memory.line_bytes},
        {"llc_ways", c.memory.llc_ways},
        {"llc_hit_ns", c.memory.llc_hit_ns},
        {"dram_latency_ns", c.memory.dram_latency_ns},
        {"dram_bw_bytes_per_ns", c.memory.dram_bytes_per_ns}}},
      {"smmu", {{"tlb_entries", c.smmu.tlb_entries}, {"translate_ns", c.smmu.translate_ns}}},
      {"engine", {{"command_ns", c.engine.command_ns}, {"double_buffer", c.engine.double_buffer}}},
      {"cpu",
       {{"freq_hz", c.cpu.freq_hz},
        {"cycles_per_mac", cpm},
        {"fp16_convert_cycles_per_element", c.cpu.fp16_convert_cycles_per_element},
        {"softmax_cycles_per_element", c.cpu.softmax_cycles_per_element},
        {"layernorm_cycles_per_element", c.cpu.layernorm_cycles_per_element},
        {"activation_cycles_per_element", c.cpu.activation_cycles_per_element},
        {"transpose_cycles_per_element", c.cpu.transpose_cycles_per_element},
        {"pack_cycles_per_element", c.cpu.pack_cycles_per_element}}},
      {"dtypes", dtype_table_to_json(c.dtypes)},
  };
}

}  // namespace matrixflow
