// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/cli.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "matrixflow/engine.hpp"
#include "matrixflow/error.hpp"
#include "matrixflow/format.hpp"
#include "matrixflow/workload.hpp"

namespace matrixflow {

namespace {

// Results land in their own slot, so output order never depends on scheduling.
template <typename T>
std::vector<T> parallel_map(std::size_t count, int jobs, const std::function<T(std::size_t)>& fn) {
  std::vector<T> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

std::string gemm_row(std::size_t size, DTypeKind dtype, AccessMode mode, const SystemConfig& base) {
  SystemConfig config = base;
  config.mode = mode;
  const GemmShape shape{size, size, size};
  const SimReport r = time_gemm(shape, dtype, config);
  const Picos baseline = run_baseline_gemm(shape, dtype, config.cpu);
  std::ostringstream row;
  row << size << ',' << access_mode_name(mode) << ',' << dtype_name(dtype) << ',' << format_ns(r.total) << ','
      << format_ns(baseline) << ',' << format_double(speedup(r, baseline)) << ',' << r.bytes_moved << ','
      << format_double(r.energy_mj);
  return row.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::Io, "cannot open output file '" + path + "'");
  file << text;
  if (!file.flush()) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw Error(ErrorCode::InvalidConfig, "malformed " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

std::string gemm_sweep_csv(const std::vector<std::size_t>& sizes, DTypeKind dtype, AccessMode mode,
                           const SystemConfig& config, int jobs) {
  validate(config);
  for (std::size_t s : sizes) {
    if (s == 0) throw Error(ErrorCode::InvalidConfig, "sizes must be >= 1");
  }
  const auto rows = parallel_map<std::string>(sizes.size(), jobs,
                                              [&](std::size_t i) { return gemm_row(sizes[i], dtype, mode, config); });
  std::string csv(kGemmSweepHeader);
  csv += '\n';
  for (const std::string& row : rows) csv += row + '\n';
  return csv;
}

std::string dtype_sweep_csv(std::size_t size, AccessMode mode, const SystemConfig& config, int jobs) {
  validate(config);
  if (size == 0) throw Error(ErrorCode::InvalidConfig, "size must be >= 1");
  const auto rows = parallel_map<std::string>(kAllDTypes.size(), jobs, [&](std::size_t i) {
    const DTypeKind kind = kAllDTypes[i];
    const DType& d = config.dtypes[kind];
    return gemm_row(size, kind, mode, config) + ',' + format_double(d.array_freq_hz) + ',' +
           format_double(d.array_power_mw);
  });
  std::string csv(kGemmSweepHeader);
  csv += ",freq_hz,power_mw\n";
  for (const std::string& row : rows) csv += row + '\n';
  return csv;
}

std::vector<LinkPreset> default_pcie_presets() { return {{16, 4.0}, {4, 4.0}, {4, 1.25}}; }

std::vector<LinkPreset> parse_link_presets(std::string_view text) {
  std::vector<LinkPreset> presets;
  while (!text.empty()) {
    const std::size_t comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const std::size_t x = item.find_first_of("xX");
    if (x == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "link preset '" + std::string(item) + "' is not LANESxGBPS");
    }
    const double lanes = parse_number(item.substr(0, x), "lane count");
    LinkPreset p{static_cast<int>(lanes), parse_number(item.substr(x + 1), "per-lane rate")};
    if (lanes < 1 || lanes != p.lanes || !(p.per_lane_gbps > 0)) {
      throw Error(ErrorCode::InvalidConfig, "link preset '" + std::string(item) + "' out of range");
    }
    presets.push_back(p);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  if (presets.empty()) throw Error(ErrorCode::InvalidConfig, "no link presets given");
  return presets;
}

std::string pcie_sweep_csv(std::size_t size, DTypeKind dtype, AccessMode mode, const std::vector<LinkPreset>& presets,
                           const SystemConfig& config, int jobs) {
  validate(config);
  if (size == 0) throw Error(ErrorCode::InvalidConfig, "size must be >= 1");
  const GemmShape shape{size, size, size};
  const Picos baseline = run_baseline_gemm(shape, dtype, config.cpu);
  const auto rows = parallel_map<std::string>(presets.size(), jobs, [&](std::size_t i) {
    SystemConfig c = config;
    c.mode = mode;
    c.link.lanes = presets[i].lanes;
    c.link.per_lane_gbps = presets[i].per_lane_gbps;
    validate(c);
    const SimReport r = time_gemm(shape, dtype, c);
    std::ostringstream row;
    row << presets[i].lanes << ',' << format_double(presets[i].per_lane_gbps) << ','
        << format_double(presets[i].lanes * presets[i].per_lane_gbps) << ',' << access_mode_name(mode) << ','
        << dtype_name(dtype) << ',' << format_ns(r.total) << ',' << format_double(speedup(r, baseline));
    return row.str();
  });
  std::string csv = "lanes,per_lane_gbps,aggregate_gbps,mode,dtype,total_ns,speedup\n";
  for (const std::string& row : rows) csv += row + '\n';
  return csv;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MatrixFlow system simulator: GEMM, dtype, PCIe and transformer experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  int jobs = 1;
  app.add_option("--config", config_path, "JSON system config")->envname("MATRIXFLOW_CONFIG");
  app.add_option("--out", out_path, "Output file (default stdout)");
  app.add_option("--jobs", jobs, "Parallel sweep points")->check(CLI::Range(1, 256));

  std::string mode_text;
  std::string dtype_text;
  std::vector<std::size_t> sizes = {64, 128, 256, 512, 1024, 2048};
  std::size_t size = 512;
  std::string links_text;
  std::string model_name;
  int seq_len = 0;
  std::string csv_path;

  auto add_mode = [&](CLI::App* sub) { sub->add_option("--mode", mode_text, "dc or dm (default from config)"); };

  CLI::App* gemm = app.add_subcommand("gemm-sweep", "Square GEMM sweep over sizes");
  gemm->add_option("--sizes", sizes, "Comma-separated sizes")->delimiter(',');
  gemm->add_option("--dtype", dtype_text, "Element type (default int8)");
  add_mode(gemm);

  CLI::App* dsweep = app.add_subcommand("dtype-sweep", "One square GEMM per element type");
  dsweep->add_option("--size", size, "Matrix size");
  add_mode(dsweep);

  CLI::App* pcie = app.add_subcommand("pcie-sweep", "Link configuration sweep");
  pcie->add_option("--size", size, "Matrix size");
  pcie->add_option("--dtype", dtype_text, "Element type (default int8)");
  pcie->add_option("--links", links_text, "LANESxGBPS list (default 16x4,4x4,4x1.25)");
  add_mode(pcie);

  CLI::App* tf = app.add_subcommand("transformer", "Transformer inference breakdown");
  tf->add_option("--model", model_name, "Builtin model name, or 'all'")->required();
  tf->add_option("--dtype", dtype_text, "Element type (default int32)");
  tf->add_option("--seq-len", seq_len, "Override sequence length")->check(CLI::PositiveNumber);
  tf->add_option("--csv", csv_path, "Also write the breakdown CSV here");
  add_mode(tf);

  app.add_subcommand("models", "Print the builtin model table as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    SystemConfig config = config_path.empty() ? SystemConfig{} : load_config(config_path);
    const AccessMode mode = mode_text.empty() ? config.mode : parse_access_mode(mode_text);
    std::optional<DTypeKind> dtype;
    if (!dtype_text.empty()) dtype = parse_dtype(dtype_text);

    std::string text;
    if (gemm->parsed()) {
      text = gemm_sweep_csv(sizes, dtype.value_or(DTypeKind::Int8), mode, config, jobs);
    } else if (dsweep->parsed()) {
      text = dtype_sweep_csv(size, mode, config, jobs);
    } else if (pcie->parsed()) {
      const auto presets = links_text.empty() ? default_pcie_presets() : parse_link_presets(links_text);
      text = pcie_sweep_csv(size, dtype.value_or(DTypeKind::Int8), mode, presets, config, jobs);
    } else if (tf->parsed()) {
      config.mode = mode;
      std::vector<TransformerConfig> models;
      if (model_name == "all") {
        models = builtin_configs();
      } else {
        models.push_back(lookup_model(model_name));
      }
      for (TransformerConfig& m : models) {
        if (dtype) m.dtype = *dtype;
        if (seq_len > 0) m.seq_len = seq_len;
      }
      const auto reports = parallel_map<TransformerReport>(
          models.size(), jobs, [&](std::size_t i) { return run_transformer(models[i], config); });
      nlohmann::json doc;
      std::string csv;
      if (reports.size() == 1) {
        doc = transformer_report_to_json(reports.front());
        csv = breakdown_csv(reports.front());
      } else {
        doc = nlohmann::json::array();
        csv = "model,label,category,ns,percent\n";
        for (const TransformerReport& r : reports) {
          doc.push_back(transformer_report_to_json(r));
          std::istringstream lines(breakdown_csv(r));
          std::string line;
          std::getline(lines, line);  // header
          while (std::getline(lines, line)) csv += csv_field(r.model.name) + ',' + line + '\n';
        }
      }
      text = doc.dump(2) + '\n';
      if (!csv_path.empty()) write_output(csv_path, csv, out);
    } else {
      text = model_table_to_json().dump(2) + '\n';
    }
    write_output(out_path, text, out);
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_usage_error() ? kExitUsage : kExitSimulation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSimulation;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  for (const std::string& a : args) argv.push_back(a.c_str());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(args.size()), argv.data(), out, err);
}

}  // namespace matrixflow
