// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/engine.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <vector>

#include "matrixflow/systolic.hpp"

namespace matrixflow {

std::string_view category_name(Category category) {
  switch (category) {
    case Category::GemmCompute: return "gemm_compute";
    case Category::DataTransfer: return "data_transfer";
    case Category::Control: return "control";
    case Category::NonGemmCpu: return "non_gemm_cpu";
  }
  return "?";
}

Picos& CategoryTimes::operator[](Category c) {
  switch (c) {
    case Category::GemmCompute: return gemm_compute;
    case Category::DataTransfer: return data_transfer;
    case Category::Control: return control;
    case Category::NonGemmCpu: break;
  }
  return non_gemm_cpu;
}

Picos CategoryTimes::operator[](Category c) const { return const_cast<CategoryTimes&>(*this)[c]; }

CategoryTimes& CategoryTimes::operator+=(const CategoryTimes& other) {
  gemm_compute += other.gemm_compute;
  data_transfer += other.data_transfer;
  control += other.control;
  non_gemm_cpu += other.non_gemm_cpu;
  return *this;
}

namespace {

TransferLedger ledger_delta(const TransferLedger& after, const TransferLedger& before) {
  TransferLedger d;
  d.bytes_read = after.bytes_read - before.bytes_read;
  d.bytes_written = after.bytes_written - before.bytes_written;
  d.block_fetches = after.block_fetches - before.block_fetches;
  d.block_writebacks = after.block_writebacks - before.block_writebacks;
  d.descriptor_fetches = after.descriptor_fetches - before.descriptor_fetches;
  d.tlb_hits = after.tlb_hits - before.tlb_hits;
  d.tlb_misses = after.tlb_misses - before.tlb_misses;
  d.llc_hits = after.llc_hits - before.llc_hits;
  d.llc_misses = after.llc_misses - before.llc_misses;
  d.data_ps = after.data_ps - before.data_ps;
  d.control_ps = after.control_ps - before.control_ps;
  return d;
}

void add_ledger(TransferLedger& into, const TransferLedger& x) {
  into.bytes_read += x.bytes_read;
  into.bytes_written += x.bytes_written;
  into.block_fetches += x.block_fetches;
  into.block_writebacks += x.block_writebacks;
  into.descriptor_fetches += x.descriptor_fetches;
  into.tlb_hits += x.tlb_hits;
  into.tlb_misses += x.tlb_misses;
  into.llc_hits += x.llc_hits;
  into.llc_misses += x.llc_misses;
  into.data_ps += x.data_ps;
  into.control_ps += x.control_ps;
}

struct Interval {
  Picos start;
  Picos end;
  Category category;
};

/// Attributes every instant of [0, total) to one category: the array when it
/// is busy, else a data transfer, else control (idle gaps count as control).
CategoryTimes attribute(const std::vector<Interval>& intervals, Picos total) {
  struct Event {
    Picos t;
    int delta;
    Category category;
  };
  std::vector<Event> events;
  events.reserve(intervals.size() * 2);
  for (const Interval& iv : intervals) {
    if (iv.end > iv.start) {
      events.push_back({iv.start, +1, iv.category});
      events.push_back({iv.end, -1, iv.category});
    }
  }
  std::ranges::sort(events, [](const Event& x, const Event& y) { return x.t < y.t; });

  CategoryTimes out;
  std::array<int, 4> active{};
  Picos cursor = 0;
  auto credit = [&](Picos until) {
    if (until <= cursor) return;
    Category c = Category::Control;
    if (active[static_cast<std::size_t>(Category::GemmCompute)] > 0) {
      c = Category::GemmCompute;
    } else if (active[static_cast<std::size_t>(Category::DataTransfer)] > 0) {
      c = Category::DataTransfer;
    }
    out[c] += until - cursor;
    cursor = until;
  };
  for (const Event& e : events) {
    credit(e.t);
    active[static_cast<std::size_t>(e.category)] += e.delta;
  }
  credit(total);
  return out;
}

struct Step {
  std::uint32_t i;
  std::uint32_t j;
  std::uint32_t k;
  bool tile_last;  // last k-block of tile (i, j): the result drains into buffer C
  bool page_end;   // buffer C holds a complete page after this tile
};

struct Channel {
  std::vector<Step> steps;
  std::vector<Picos> fetch_end;
  std::vector<Picos> compute_end;
  std::size_t fetch_idx = 0;
  std::size_t compute_idx = 0;
  Picos sa_free = 0;
  Picos c_ready = 0;
  bool flush_pending = false;
  Picos flush_ready = 0;
  std::uint64_t flush_addr = 0;

  bool done() const { return compute_idx == steps.size() && !flush_pending; }
};

class PipelineScheduler {
 public:
  PipelineScheduler(const GemmShape& shape, DTypeKind dtype, const SystemConfig& config, MemorySystem& memory,
                    const GemmPlacement& placement)
      : config_(config), memory_(memory), placement_(placement) {
    const BlockGeometry geo = block_geometry(dtype, config.array.dim);
    const auto w = static_cast<std::size_t>(geo.w);
    const auto l = static_cast<std::size_t>(geo.l);
    m_tiles_ = (shape.m + w - 1) / w;
    n_tiles_ = (shape.n + w - 1) / w;
    k_blocks_ = (shape.k + l - 1) / l;
    tiles_per_page_ = l / w;
    c_pages_per_row_ = (shape.n + l - 1) / l;

    cycles_per_block_ = sa_cycles(geo.l, config.array);
    block_ps_ = cycles_to_ps(cycles_per_block_, config.dtypes[dtype].array_freq_hz);
    depth_ = config.engine.double_buffer ? 2 : 1;
    t0_ = ns_to_ps(config.engine.command_ns);
    intervals_.push_back({0, t0_, Category::Control});

    channels_.resize(static_cast<std::size_t>(config.engine.channels));
    for (std::size_t i = 0; i < m_tiles_; ++i) {
      Channel& ch = channels_[i % channels_.size()];
      for (std::size_t j = 0; j < n_tiles_; ++j) {
        for (std::size_t k = 0; k < k_blocks_; ++k) {
          const bool last = k + 1 == k_blocks_;
          const bool page_end = last && ((j + 1) % tiles_per_page_ == 0 || j + 1 == n_tiles_);
          ch.steps.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j),
                              static_cast<std::uint32_t>(k), last, page_end});
        }
      }
    }
    for (Channel& ch : channels_) {
      ch.fetch_end.assign(ch.steps.size(), 0);
      ch.compute_end.assign(ch.steps.size(), 0);
      ch.sa_free = t0_;
      ch.c_ready = t0_;
    }
  }

  void run() {
    std::size_t rr = 0;
    while (true) {
      struct Candidate {
        std::size_t channel;
        bool flush;
        Picos ready;
      };
      std::optional<Candidate> best;
      bool all_done = true;
      for (std::size_t n = 0; n < channels_.size(); ++n) {
        const std::size_t c = (rr + n) % channels_.size();
        Channel& ch = channels_[c];
        all_done = all_done && ch.done();
        if (ch.flush_pending && (!best || ch.flush_ready < best->ready)) {
          best = Candidate{c, true, ch.flush_ready};
        }
        if (auto ready = fetch_ready(ch); ready && (!best || *ready < best->ready)) {
          best = Candidate{c, false, *ready};
        }
      }
      if (all_done) break;
      if (!best) {
        throw Error(ErrorCode::InvalidConfig, "pipeline schedule deadlocked");
      }
      Channel& ch = channels_[best->channel];
      if (best->flush) {
        serve_flush(ch);
      } else {
        serve_fetch(ch, best->ready);
      }
      advance_compute(ch);
      rr = (best->channel + 1) % channels_.size();
    }
  }

  SimReport report() const {
    SimReport r;
    Picos total = t0_;
    for (const Interval& iv : intervals_) {
      total = std::max(total, iv.end);
    }
    r.total = total;  // the completion interrupt is a zero-cost marker
    r.category = attribute(intervals_, total);
    r.block_ops = block_ops_;
    r.array_cycles = static_cast<std::int64_t>(block_ops_) * cycles_per_block_;
    r.transfer_busy = transfer_busy_;
    r.compute_busy = compute_busy_;
    return r;
  }

  std::int64_t cycles_per_block() const { return cycles_per_block_; }

 private:
  std::optional<Picos> fetch_ready(const Channel& ch) const {
    if (ch.fetch_idx >= ch.steps.size()) return std::nullopt;
    if (ch.fetch_idx < depth_) return t0_;
    const std::size_t waits_on = ch.fetch_idx - depth_;  // buffer slot freed by this step's compute
    if (ch.compute_idx > waits_on) return ch.compute_end[waits_on];
    return std::nullopt;
  }

  Picos dma(std::uint64_t addr, Direction dir, Picos start) {
    const DmaCost cost = memory_.dma_block_transfer(addr, kPageBytes, dir);
    intervals_.push_back({start, start + cost.control, Category::Control});
    intervals_.push_back({start + cost.control, start + cost.total(), Category::DataTransfer});
    transfer_busy_ += cost.total();
    return start + cost.total();
  }

  void serve_fetch(Channel& ch, Picos ready) {
    const Step& s = ch.steps[ch.fetch_idx];
    Picos t = std::max(link_free_, ready);
    t = dma(placement_.a_base + (s.i * k_blocks_ + s.k) * kPageBytes, Direction::Read, t);
    t = dma(placement_.b_base + (s.j * k_blocks_ + s.k) * kPageBytes, Direction::Read, t);
    link_free_ = t;
    ch.fetch_end[ch.fetch_idx] = t;
    ++ch.fetch_idx;
  }

  void serve_flush(Channel& ch) {
    const Picos start = std::max(link_free_, ch.flush_ready);
    link_free_ = dma(ch.flush_addr, Direction::Write, start);
    ch.c_ready = link_free_;
    ch.flush_pending = false;
  }

  void advance_compute(Channel& ch) {
    while (ch.compute_idx < ch.fetch_idx) {
      const Step& s = ch.steps[ch.compute_idx];
      if (s.tile_last && ch.flush_pending) break;  // buffer C still holds the previous page
      Picos start = std::max(ch.fetch_end[ch.compute_idx], ch.sa_free);
      if (s.tile_last) start = std::max(start, ch.c_ready);
      const Picos end = start + block_ps_;
      intervals_.push_back({start, end, Category::GemmCompute});
      compute_busy_ += block_ps_;
      ++block_ops_;
      ch.compute_end[ch.compute_idx] = end;
      ch.sa_free = end;
      ++ch.compute_idx;
      if (s.page_end) {
        ch.flush_pending = true;
        ch.flush_ready = end;
        ch.flush_addr = placement_.c_base + (s.i * c_pages_per_row_ + s.j / tiles_per_page_) * kPageBytes;
      }
    }
  }

  const SystemConfig& config_;
  MemorySystem& memory_;
  GemmPlacement placement_;
  std::size_t m_tiles_ = 0;
  std::size_t n_tiles_ = 0;
  std::size_t k_blocks_ = 0;
  std::size_t tiles_per_page_ = 1;
  std::size_t c_pages_per_row_ = 1;
  std::int64_t cycles_per_block_ = 0;
  Picos block_ps_ = 0;
  std::size_t depth_ = 2;
  Picos t0_ = 0;
  Picos link_free_ = 0;
  std::vector<Channel> channels_;
  std::vector<Interval> intervals_;
  std::uint64_t block_ops_ = 0;
  Picos transfer_busy_ = 0;
  Picos compute_busy_ = 0;
};

}  // namespace

SimReport& SimReport::operator+=(const SimReport& other) {
  total += other.total;
  category += other.category;
  bytes_moved += other.bytes_moved;
  energy_mj += other.energy_mj;
  add_ledger(ledger, other.ledger);
  block_ops += other.block_ops;
  array_cycles += other.array_cycles;
  transfer_busy += other.transfer_busy;
  compute_busy += other.compute_busy;
  return *this;
}

nlohmann::json report_to_json(const SimReport& r) {
  const TransferLedger& l = r.ledger;
  return {
      {"total_ns", ps_to_ns(r.total)},
      {"category_ns",
       {{"gemm_compute", ps_to_ns(r.category.gemm_compute)},
        {"data_transfer", ps_to_ns(r.category.data_transfer)},
        {"control", ps_to_ns(r.category.control)},
        {"non_gemm_cpu", ps_to_ns(r.category.non_gemm_cpu)}}},
      {"bytes_moved", r.bytes_moved},
      {"energy_mj", r.energy_mj},
      {"speedup_vs_baseline", r.speedup_vs_baseline},
      {"ledger",
       {{"bytes_read", l.bytes_read},
        {"bytes_written", l.bytes_written},
        {"block_fetches", l.block_fetches},
        {"block_writebacks", l.block_writebacks},
        {"descriptor_fetches", l.descriptor_fetches},
        {"tlb_hits", l.tlb_hits},
        {"tlb_misses", l.tlb_misses},
        {"llc_hits", l.llc_hits},
        {"llc_misses", l.llc_misses},
        {"data_ns", ps_to_ns(l.data_ps)},
        {"control_ns", ps_to_ns(l.control_ps)},
        {"block_ops", r.block_ops},
        {"array_cycles", r.array_cycles}}},
  };
}

std::size_t blocked_bytes(std::size_t rows, std::size_t cols, DTypeKind dtype, Layout layout, int w) {
  const BlockGeometry geo = block_geometry(dtype, w);
  const auto bw = static_cast<std::size_t>(geo.w);
  const auto bl = static_cast<std::size_t>(geo.l);
  const std::size_t r_mult = layout == Layout::ARowBand ? bw : bl;
  const std::size_t c_mult = layout == Layout::ARowBand ? bl : bw;
  return ((rows + r_mult - 1) / r_mult) * ((cols + c_mult - 1) / c_mult) * kPageBytes;
}

SimReport time_gemm(const GemmShape& shape, DTypeKind dtype, const SystemConfig& config, MemorySystem& memory,
                    const GemmPlacement& placement) {
  if (shape.m == 0 || shape.n == 0 || shape.k == 0) {
    throw Error(ErrorCode::EmptyMatrix, "GEMM dimensions must be at least 1");
  }
  const TransferLedger before = memory.ledger();
  PipelineScheduler scheduler(shape, dtype, config, memory, placement);
  scheduler.run();
  SimReport r = scheduler.report();
  r.ledger = ledger_delta(memory.ledger(), before);
  r.bytes_moved = r.ledger.bytes_moved();
  r.energy_mj = static_cast<double>(r.block_ops) * block_energy(config.dtypes[dtype], scheduler.cycles_per_block());
  return r;
}

SimReport time_gemm(const GemmShape& shape, DTypeKind dtype, const SystemConfig& config) {
  validate(config);
  MemorySystem memory(config.link, config.memory, config.smmu, config.mode);
  const int w = config.array.dim;
  const std::size_t a_bytes = blocked_bytes(shape.m, shape.k, dtype, Layout::ARowBand, w);
  const std::size_t b_bytes = blocked_bytes(shape.k, shape.n, dtype, Layout::BRestructured, w);
  GemmPlacement placement;
  placement.a_base = memory.allocate(a_bytes);
  placement.b_base = memory.allocate(b_bytes);
  placement.c_base = memory.allocate(blocked_bytes(shape.m, shape.n, dtype, Layout::ARowBand, w));
  memory.cpu_write(placement.a_base, a_bytes);
  memory.cpu_write(placement.b_base, b_bytes);
  return time_gemm(shape, dtype, config, memory, placement);
}

std::pair<BlockedMatrix, SimReport> run_gemm(const BlockedMatrix& a, const BlockedMatrix& b,
                                             const SystemConfig& config) {
  check_operands(a, b);
  if (a.geometry().w != config.array.dim) {
    throw Error(ErrorCode::GeometryMismatch, "operand block width does not match the array dimension");
  }
  BlockedMatrix c = block_matrix_multiply(a, b);
  SimReport report = time_gemm(GemmShape{a.rows(), b.cols(), a.cols()}, a.dtype(), config);
  return {std::move(c), report};
}

Picos run_baseline_gemm(const GemmShape& shape, DTypeKind dtype, const CpuCostModel& cpu) {
  const auto macs = static_cast<double>(shape.macs());
  double cycles = macs * cpu.mac_cycles(dtype);
  if (dtype == DTypeKind::Fp16) {
    // both operands converted per MAC, one conversion per output element
    const auto outputs = static_cast<double>(shape.m) * static_cast<double>(shape.n);
    cycles += cpu.fp16_convert_cycles_per_element * (2.0 * macs + outputs);
  }
  return cpu.cycles_to_ps(cycles);
}

double speedup(const SimReport& report, Picos baseline) {
  return static_cast<double>(baseline) / static_cast<double>(report.total);
}

}  // namespace matrixflow
