// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "matrixflow/engine.hpp"

using namespace matrixflow;

namespace {

void check_closure(const SimReport& r) {
  CHECK(r.category.sum() == r.total);
  CHECK(r.category.gemm_compute >= 0);
  CHECK(r.category.data_transfer >= 0);
  CHECK(r.category.control >= 0);
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("single-block GEMM is fully serial") {
    for (AccessMode mode : {AccessMode::DC, AccessMode::DM}) {
      SystemConfig cfg;
      cfg.mode = mode;
      const GemmShape shape{16, 16, 256};
      const SimReport r = time_gemm(shape, DTypeKind::Int8, cfg);

      // replay the same transfers on an identically prepared memory system
      MemorySystem ms(cfg.link, cfg.memory, cfg.smmu, mode);
      const std::uint64_t a = ms.allocate(4096), b = ms.allocate(4096), c = ms.allocate(4096);
      ms.cpu_write(a, 4096);
      ms.cpu_write(b, 4096);
      const Picos fa = ms.dma_block_transfer(a, 4096, Direction::Read).total();
      const Picos fb = ms.dma_block_transfer(b, 4096, Direction::Read).total();
      const Picos wc = ms.dma_block_transfer(c, 4096, Direction::Write).total();
      const Picos expect = ns_to_ps(cfg.engine.command_ns) + fa + fb + cycles_to_ps(287, 1e9) + wc;
      CHECK(r.total == expect);
      CHECK(r.category.gemm_compute == cycles_to_ps(287, 1e9));
      check_closure(r);
      CHECK(r.block_ops == 1);
      CHECK(r.ledger.block_writebacks == 1);
    }
  }

  TEST_CASE("512 cubed Int8 byte accounting") {
    const SimReport r = time_gemm({512, 512, 512}, DTypeKind::Int8, SystemConfig{});
    CHECK(r.ledger.block_fetches == 4096);
    CHECK(r.ledger.bytes_read == 16u << 20);
    // C: 512x512 Int8 = 64 pages
    CHECK(r.ledger.block_writebacks == 64);
    CHECK(r.ledger.bytes_written == 64 * 4096);
    CHECK(r.bytes_moved == (16u << 20) + 64 * 4096);
    CHECK(r.ledger.descriptor_fetches == 4096 + 64);
    CHECK(r.block_ops == 2048);
    check_closure(r);
    CHECK(r.category.control > 0);
  }

  TEST_CASE("fetch count formula over padded shapes") {
    for (auto [m, n, k, kind] : {std::tuple{17u, 40u, 300u, DTypeKind::Int32}, std::tuple{1u, 1u, 1u, DTypeKind::Fp16},
                                 std::tuple{100u, 33u, 129u, DTypeKind::Int16}}) {
      const auto g = block_geometry(kind);
      const std::uint64_t mt = (m + 15) / 16, nt = (n + 15) / 16, kb = (k + g.l - 1) / g.l;
      const SimReport r = time_gemm({m, n, k}, kind, SystemConfig{});
      CHECK(r.ledger.block_fetches == 2 * mt * nt * kb);
      CHECK(r.ledger.bytes_read == r.ledger.block_fetches * 4096);
      const std::uint64_t tiles_per_page = static_cast<std::uint64_t>(g.l) / 16;
      CHECK(r.ledger.block_writebacks == mt * ((nt + tiles_per_page - 1) / tiles_per_page));
    }
  }

  TEST_CASE("compute-bound limit") {
    SystemConfig cfg;
    cfg.link.per_lane_gbps = 1e7;
    cfg.link.base_latency_ns = 0;
    cfg.memory.dram_latency_ns = 0;
    cfg.memory.llc_hit_ns = 0;
    cfg.memory.dram_bytes_per_ns = 1e9;
    cfg.smmu.translate_ns = 0;
    const GemmShape shape{256, 256, 1024};
    const SimReport r = time_gemm(shape, DTypeKind::Int8, cfg);
    const double steps = 16.0 * 16.0 * 4.0;
    const double model = cfg.engine.command_ns + steps * 287.0;
    CHECK(ps_to_ns(r.total) == doctest::Approx(model).epsilon(0.01));
    CHECK(r.category.gemm_compute == static_cast<Picos>(steps) * 287000);
  }

  TEST_CASE("pipeline bounds") {
    for (bool db : {true, false}) {
      SystemConfig cfg;
      cfg.engine.double_buffer = db;
      const SimReport r = time_gemm({128, 128, 512}, DTypeKind::Int16, cfg);
      const Picos path = r.total - ns_to_ps(cfg.engine.command_ns);
      CHECK(path >= std::max(r.transfer_busy, r.compute_busy));
      CHECK(path <= r.transfer_busy + r.compute_busy);
      check_closure(r);
    }
    SystemConfig single;
    single.engine.double_buffer = false;
    CHECK(time_gemm({128, 128, 512}, DTypeKind::Int16, single).total >=
          time_gemm({128, 128, 512}, DTypeKind::Int16, SystemConfig{}).total);
  }

  TEST_CASE("monotonic in link bandwidth and in M, N, K") {
    Picos prev = std::numeric_limits<Picos>::max();
    for (double g : {1.0, 2.0, 4.0, 8.0, 32.0}) {
      SystemConfig cfg;
      cfg.link.per_lane_gbps = g;
      const Picos t = time_gemm({96, 96, 300}, DTypeKind::Int8, cfg).total;
      CHECK(t <= prev);
      prev = t;
    }
    Picos last = 0;
    for (std::size_t s : {16u, 48u, 100u, 200u}) {
      const Picos tm = time_gemm({s, 64, 64}, DTypeKind::Fp32, SystemConfig{}).total;
      const Picos tn = time_gemm({64, s, 64}, DTypeKind::Fp32, SystemConfig{}).total;
      const Picos tk = time_gemm({64, 64, s}, DTypeKind::Fp32, SystemConfig{}).total;
      CHECK(std::min({tm, tn, tk}) >= last);
      last = std::min({tm, tn, tk});
    }
  }

  TEST_CASE("multiple channels share the link and keep closure") {
    SystemConfig cfg;
    cfg.engine.channels = 3;
    const SimReport r = time_gemm({100, 64, 512}, DTypeKind::Int8, cfg);
    check_closure(r);
    CHECK(r.ledger.block_fetches == 2 * 7 * 4 * 2);
    CHECK(r.total > 0);
  }

  TEST_CASE("run_gemm returns the functional result") {
    std::mt19937_64 rng(20);
    const DenseMatrix a = oracle::random_dense(40, 300, DTypeKind::Int16, rng);
    const DenseMatrix b = oracle::random_dense(300, 20, DTypeKind::Int16, rng);
    const auto [c, report] = run_gemm(pack_a(a), pack_b(b), SystemConfig{});
    CHECK(unpack(c) == naive_gemm(a, b));
    CHECK(report.total == time_gemm({40, 20, 300}, DTypeKind::Int16, SystemConfig{}).total);
  }

  TEST_CASE("baseline and speedup") {
    CpuCostModel cpu;
    cpu.cycles_per_mac[static_cast<std::size_t>(DTypeKind::Int32)] = 2.0;
    CHECK(run_baseline_gemm({256, 256, 256}, DTypeKind::Int32, cpu) == 33'554'432'000);
    CHECK(run_baseline_gemm({1, 1, 1}, DTypeKind::Int8, CpuCostModel{}) == 4000);
    CHECK(run_baseline_gemm({64, 64, 64}, DTypeKind::Fp16, CpuCostModel{}) >
          run_baseline_gemm({64, 64, 64}, DTypeKind::Fp32, CpuCostModel{}));
    SimReport r;
    r.total = 1234;
    CHECK(speedup(r, 1234) == 1.0);
  }

  TEST_CASE("DC beats DM on 512 cubed Int8") {
    SystemConfig dc, dm;
    dm.mode = AccessMode::DM;
    const GemmShape s{512, 512, 512};
    const Picos base = run_baseline_gemm(s, DTypeKind::Int8, dc.cpu);
    CHECK(speedup(time_gemm(s, DTypeKind::Int8, dc), base) >= speedup(time_gemm(s, DTypeKind::Int8, dm), base));
  }

  TEST_CASE("report JSON field names") {
    const SimReport r = time_gemm({16, 16, 16}, DTypeKind::Int8, SystemConfig{});
    const auto j = report_to_json(r);
    for (const char* key : {"total_ns", "category_ns", "bytes_moved", "energy_mj", "speedup_vs_baseline"}) {
      CHECK(j.contains(key));
    }
    for (const char* key : {"gemm_compute", "data_transfer", "control", "non_gemm_cpu"}) {
      CHECK(j["category_ns"].contains(key));
    }
    CHECK(j["energy_mj"].get<double>() == doctest::Approx(block_energy(DType::of(DTypeKind::Int8), 287)));
  }
}
