// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <list>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace matrixflow {

/// Simulated time in integer picoseconds.
using Picos = std::int64_t;

Picos ns_to_ps(double ns);
inline double ps_to_ns(Picos ps) { return static_cast<double>(ps) / 1000.0; }

struct LinkConfig {
  int lanes = 16;
  double per_lane_gbps = 4.0;  // 16 lanes x 4 Gb/s = 64 Gb/s aggregate
  double efficiency = 0.85;
  double base_latency_ns = 500.0;
  std::size_t max_payload_bytes = 4096;

  /// lanes * per_lane_gbps * efficiency / 8, in bytes per ns.
  double effective_bytes_per_ns() const;
  friend bool operator==(const LinkConfig&, const LinkConfig&) = default;
};

struct MemoryConfig {
  std::size_t llc_bytes = 2u << 20;
  std::size_t line_bytes = 64;
  int llc_ways = 16;
  double llc_hit_ns = 20.0;
  double dram_latency_ns = 60.0;
  double dram_bytes_per_ns = 12.8;  // DDR3_1600_8x8

  friend bool operator==(const MemoryConfig&, const MemoryConfig&) = default;
};

struct SmmuConfig {
  int tlb_entries = 512;
  double translate_ns = 100.0;  // per TLB miss

  friend bool operator==(const SmmuConfig&, const SmmuConfig&) = default;
};

enum class AccessMode : std::uint8_t { DC, DM };
enum class Direction : std::uint8_t { Read, Write };

std::string_view access_mode_name(AccessMode mode);
AccessMode parse_access_mode(std::string_view text);  // "dc"/"dm", any case

/// Validates the three configs, throwing InvalidConfig.
void validate(const LinkConfig& link);
void validate(const MemoryConfig& memory);
void validate(const SmmuConfig& smmu);

struct TouchResult {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
};

/// Set-associative LRU cache over fixed-size lines.
class LlcModel {
 public:
  explicit LlcModel(const MemoryConfig& config);

  /// Looks up one line; on a miss the line is filled when `allocate` is set.
  bool access(std::uint64_t addr, bool allocate);
  bool contains(std::uint64_t addr) const;

  std::size_t sets() const { return sets_; }
  std::size_t ways() const { return ways_; }
  std::size_t line_bytes() const { return line_bytes_; }

 private:
  std::size_t set_of(std::uint64_t line) const { return static_cast<std::size_t>(line % sets_); }

  std::size_t line_bytes_;
  std::size_t sets_;
  std::size_t ways_;
  std::vector<std::uint64_t> tags_;   // line number + 1; 0 marks an invalid way
  std::vector<std::uint64_t> stamps_;  // last-use time per way
  std::uint64_t clock_ = 0;
};

/// Touches every line overlapping [addr, addr + bytes).
TouchResult llc_touch(std::uint64_t addr, std::size_t bytes, LlcModel& cache, bool allocate = true);

/// Fully associative LRU translation cache keyed by 4 KiB page number.
class TlbModel {
 public:
  explicit TlbModel(int entries);
  bool lookup(std::uint64_t page);  // true on hit; a miss installs the page

 private:
  std::size_t capacity_;
  std::list<std::uint64_t> order_;  // front = most recent
  std::unordered_map<std::uint64_t, std::list<std::uint64_t>::iterator> index_;
};

/// Time for one device transfer of `bytes` at `addr`.
/// DC: 64 B requests through the LLC, hit latency pipelined behind the link,
///     one DRAM latency exposed if any line misses, misses limited by DRAM bw.
/// DM: bursts of up to max_payload straight to the memory controller.
double transfer_time(std::uint64_t addr, std::size_t bytes, Direction direction, AccessMode mode,
                     const LinkConfig& link, const MemoryConfig& memory, LlcModel& cache,
                     TouchResult* lines = nullptr);

struct TransferLedger {
  std::uint64_t bytes_read = 0;
  std::uint64_t bytes_written = 0;
  std::uint64_t block_fetches = 0;
  std::uint64_t block_writebacks = 0;
  std::uint64_t descriptor_fetches = 0;
  std::uint64_t tlb_hits = 0;
  std::uint64_t tlb_misses = 0;
  std::uint64_t llc_hits = 0;
  std::uint64_t llc_misses = 0;
  Picos data_ps = 0;
  Picos control_ps = 0;

  std::uint64_t bytes_moved() const { return bytes_read + bytes_written; }
  friend bool operator==(const TransferLedger&, const TransferLedger&) = default;
};

struct DmaCost {
  Picos control = 0;  // descriptor fetch + address translation
  Picos data = 0;

  Picos total() const { return control + data; }
};

/// Host-side state of one simulation run: caches, TLB, ledger and a
/// page-aligned physical address allocator.
class MemorySystem {
 public:
  MemorySystem(const LinkConfig& link, const MemoryConfig& memory, const SmmuConfig& smmu, AccessMode mode);

  /// One DMA transaction: descriptor fetch, SMMU lookup per page touched, payload.
  DmaCost dma_block_transfer(std::uint64_t addr, std::size_t bytes, Direction direction);

  /// CPU stores (e.g. packing an operand) write-allocate into the LLC.
  void cpu_write(std::uint64_t addr, std::size_t bytes);

  /// Returns a fresh page-aligned region.
  std::uint64_t allocate(std::size_t bytes);

  double descriptor_ns() const;

  AccessMode mode() const { return mode_; }
  const LinkConfig& link() const { return link_; }
  const MemoryConfig& memory() const { return memory_; }
  const SmmuConfig& smmu() const { return smmu_; }
  const TransferLedger& ledger() const { return ledger_; }
  LlcModel& llc() { return llc_; }

 private:
  LinkConfig link_;
  MemoryConfig memory_;
  SmmuConfig smmu_;
  AccessMode mode_;
  LlcModel llc_;
  TlbModel tlb_;
  TransferLedger ledger_;
  std::uint64_t next_addr_ = 0x80000000ull;
};

}  // namespace matrixflow
