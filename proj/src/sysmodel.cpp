// SPDX-License-Identifier: Apache-2.0
#include "matrixflow/sysmodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "matrixflow/block_layout.hpp"
#include "matrixflow/error.hpp"

namespace matrixflow {

Picos ns_to_ps(double ns) { return std::llround(ns * 1000.0); }

double LinkConfig::effective_bytes_per_ns() const {
  return static_cast<double>(lanes) * per_lane_gbps * efficiency / 8.0;
}

std::string_view access_mode_name(AccessMode mode) { return mode == AccessMode::DC ? "DC" : "DM"; }

AccessMode parse_access_mode(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "dc") return AccessMode::DC;
  if (lower == "dm") return AccessMode::DM;
  throw Error(ErrorCode::InvalidConfig, "access mode must be DC or DM, got '" + std::string(text) + "'");
}

void validate(const LinkConfig& link) {
  if (link.lanes < 1) throw Error(ErrorCode::InvalidConfig, "link.lanes must be >= 1");
  if (!(link.per_lane_gbps > 0.0)) throw Error(ErrorCode::InvalidConfig, "link.gbps must be > 0");
  if (!(link.efficiency > 0.0 && link.efficiency <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "link.eta must be in (0, 1]");
  }
  if (link.base_latency_ns < 0.0) throw Error(ErrorCode::InvalidConfig, "link.base_latency_ns must be >= 0");
  if (link.max_payload_bytes == 0) throw Error(ErrorCode::InvalidConfig, "link.max_payload must be > 0");
}

void validate(const MemoryConfig& memory) {
  if (memory.line_bytes == 0 || memory.llc_ways < 1) {
    throw Error(ErrorCode::InvalidConfig, "memory.line_bytes and memory.llc_ways must be positive");
  }
  if (memory.llc_bytes % memory.line_bytes != 0) {
    throw Error(ErrorCode::InvalidConfig, "memory.llc_bytes must be a multiple of memory.line_bytes");
  }
  const std::size_t lines = memory.llc_bytes / memory.line_bytes;
  if (lines == 0 || lines % static_cast<std::size_t>(memory.llc_ways) != 0) {
    throw Error(ErrorCode::InvalidConfig, "memory.llc_bytes must hold a whole number of sets");
  }
  if (memory.llc_hit_ns < 0.0 || memory.dram_latency_ns < 0.0 || !(memory.dram_bytes_per_ns > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "memory latencies must be >= 0 and bandwidth > 0");
  }
}

void validate(const SmmuConfig& smmu) {
  if (smmu.tlb_entries < 1) throw Error(ErrorCode::InvalidConfig, "smmu.tlb_entries must be >= 1");
  if (smmu.translate_ns < 0.0) throw Error(ErrorCode::InvalidConfig, "smmu.translate_ns must be >= 0");
}

// ---------------------------------------------------------------------------
// LLC
// ---------------------------------------------------------------------------

LlcModel::LlcModel(const MemoryConfig& config)
    : line_bytes_(config.line_bytes),
      sets_(config.llc_bytes / config.line_bytes / static_cast<std::size_t>(config.llc_ways)),
      ways_(static_cast<std::size_t>(config.llc_ways)),
      tags_(sets_ * ways_, 0),
      stamps_(sets_ * ways_, 0) {}

bool LlcModel::access(std::uint64_t addr, bool allocate) {
  const std::uint64_t line = addr / line_bytes_;
  const std::size_t base = set_of(line) * ways_;
  const std::uint64_t tag = line + 1;
  ++clock_;
  std::size_t victim = base;
  for (std::size_t w = base; w < base + ways_; ++w) {
    if (tags_[w] == tag) {
      stamps_[w] = clock_;
      return true;
    }
    // invalid ways have stamp 0, so they are always chosen first
    if (stamps_[w] < stamps_[victim]) {
      victim = w;
    }
  }
  if (allocate) {
    tags_[victim] = tag;
    stamps_[victim] = clock_;
  }
  return false;
}

bool LlcModel::contains(std::uint64_t addr) const {
  const std::uint64_t line = addr / line_bytes_;
  const std::size_t base = set_of(line) * ways_;
  return std::find(tags_.begin() + static_cast<std::ptrdiff_t>(base),
                   tags_.begin() + static_cast<std::ptrdiff_t>(base + ways_), line + 1) !=
         tags_.begin() + static_cast<std::ptrdiff_t>(base + ways_);
}

TouchResult llc_touch(std::uint64_t addr, std::size_t bytes, LlcModel& cache, bool allocate) {
  TouchResult result;
  if (bytes == 0) {
    return result;
  }
  const std::uint64_t line = cache.line_bytes();
  const std::uint64_t first = addr / line;
  const std::uint64_t last = (addr + bytes - 1) / line;
  for (std::uint64_t l = first; l <= last; ++l) {
    if (cache.access(l * line, allocate)) {
      ++result.hits;
    } else {
      ++result.misses;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// TLB
// ---------------------------------------------------------------------------

TlbModel::TlbModel(int entries) : capacity_(static_cast<std::size_t>(std::max(entries, 1))) {}

bool TlbModel::lookup(std::uint64_t page) {
  if (auto it = index_.find(page); it != index_.end()) {
    order_.splice(order_.begin(), order_, it->second);
    return true;
  }
  if (order_.size() == capacity_) {
    index_.erase(order_.back());
    order_.pop_back();
  }
  order_.push_front(page);
  index_[page] = order_.begin();
  return false;
}

// ---------------------------------------------------------------------------
// Transfers
// ---------------------------------------------------------------------------

double transfer_time(std::uint64_t addr, std::size_t bytes, Direction direction, AccessMode mode,
                     const LinkConfig& link, const MemoryConfig& memory, LlcModel& cache, TouchResult* lines) {
  if (bytes == 0) {
    return 0.0;
  }
  const double link_bw = link.effective_bytes_per_ns();
  if (mode == AccessMode::DM) {
    const std::size_t bursts = (bytes + link.max_payload_bytes - 1) / link.max_payload_bytes;
    return link.base_latency_ns + static_cast<double>(bursts) * memory.dram_latency_ns +
           static_cast<double>(bytes) / std::min(link_bw, memory.dram_bytes_per_ns);
  }

  // DC: split into line-sized requests
  const bool allocate = direction == Direction::Read;
  const std::uint64_t line = memory.line_bytes;
  double stream_ns = 0.0;
  TouchResult touched;
  std::uint64_t pos = addr;
  const std::uint64_t end = addr + bytes;
  while (pos < end) {
    const std::uint64_t line_end = (pos / line + 1) * line;
    const auto chunk = static_cast<double>(std::min(line_end, end) - pos);
    const bool hit = cache.access(pos, allocate);
    const double link_ns = chunk / link_bw;
    if (hit) {
      ++touched.hits;
      stream_ns += link_ns;
    } else {
      ++touched.misses;
      stream_ns += std::max(link_ns, chunk / memory.dram_bytes_per_ns);
    }
    pos = std::min(line_end, end);
  }
  if (lines != nullptr) {
    *lines = touched;
  }
  return link.base_latency_ns + memory.llc_hit_ns + (touched.misses > 0 ? memory.dram_latency_ns : 0.0) +
         stream_ns;
}

MemorySystem::MemorySystem(const LinkConfig& link, const MemoryConfig& memory, const SmmuConfig& smmu,
                           AccessMode mode)
    : link_(link), memory_(memory), smmu_(smmu), mode_(mode), llc_(memory), tlb_(smmu.tlb_entries) {
  validate(link_);
  validate(memory_);
  validate(smmu_);
}

double MemorySystem::descriptor_ns() const {
  const double bw = std::min(link_.effective_bytes_per_ns(), memory_.dram_bytes_per_ns);
  return memory_.dram_latency_ns + static_cast<double>(memory_.line_bytes) / bw;
}

DmaCost MemorySystem::dma_block_transfer(std::uint64_t addr, std::size_t bytes, Direction direction) {
  DmaCost cost;
  double control_ns = descriptor_ns();
  ++ledger_.descriptor_fetches;

  const std::uint64_t first_page = addr / kPageBytes;
  const std::uint64_t last_page = bytes == 0 ? first_page : (addr + bytes - 1) / kPageBytes;
  for (std::uint64_t page = first_page; page <= last_page; ++page) {
    if (tlb_.lookup(page)) {
      ++ledger_.tlb_hits;
    } else {
      ++ledger_.tlb_misses;
      control_ns += smmu_.translate_ns;
    }
  }

  TouchResult lines;
  const double data_ns = transfer_time(addr, bytes, direction, mode_, link_, memory_, llc_, &lines);
  ledger_.llc_hits += lines.hits;
  ledger_.llc_misses += lines.misses;
  if (direction == Direction::Read) {
    ledger_.bytes_read += bytes;
    ++ledger_.block_fetches;
  } else {
    ledger_.bytes_written += bytes;
    ++ledger_.block_writebacks;
  }

  cost.control = ns_to_ps(control_ns);
  cost.data = ns_to_ps(data_ns);
  ledger_.control_ps += cost.control;
  ledger_.data_ps += cost.data;
  return cost;
}

void MemorySystem::cpu_write(std::uint64_t addr, std::size_t bytes) { llc_touch(addr, bytes, llc_, true); }

std::uint64_t MemorySystem::allocate(std::size_t bytes) {
  const std::uint64_t base = next_addr_;
  const std::uint64_t pages = (std::max<std::size_t>(bytes, 1) + kPageBytes - 1) / kPageBytes;
  next_addr_ += pages * kPageBytes;
  return base;
}

}  // namespace matrixflow
