// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "matrixflow/cli.hpp"

using namespace matrixflow;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "matrixflow");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / ("matrixflow_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("gemm sweep rows and speedup trend") {
    const Run r = cli({"gemm-sweep", "--sizes", "256,512,1024", "--dtype", "int8", "--mode", "dc"});
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 4);
    CHECK(r.out.rfind(std::string(kGemmSweepHeader) + "\n", 0) == 0);
    CHECK(std::stod(rows[1][5]) < std::stod(rows[2][5]));
    CHECK(std::stod(rows[2][5]) < std::stod(rows[3][5]));
    CHECK(rows[1][1] == "DC");
    CHECK(rows[1][2] == "int8");
    CHECK(r.out.find('\r') == std::string::npos);
  }

  TEST_CASE("usage errors exit 2") {
    CHECK(cli({"gemm-sweep", "--dtype", "int4"}).code == kExitUsage);
    CHECK(cli({"gemm-sweep", "--mode", "xx"}).code == kExitUsage);
    CHECK(cli({"gemm-sweep", "--sizes", "0"}).code == kExitUsage);
    CHECK(cli({"transformer", "--model", "gpt-9"}).code == kExitUsage);
    CHECK(cli({"bogus"}).code == kExitUsage);
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);
    CHECK(cli({"pcie-sweep", "--links", "4by2"}).code == kExitUsage);
  }

  TEST_CASE("config files and the environment fallback") {
    const fs::path dir = temp_dir();
    const fs::path good = dir / "dm.json";
    std::ofstream(good) << R"({"mode": "DM"})";
    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << "{\n  \"link\": {\"lanes\": 4,,}\n}";

    Run r = cli({"--config", good.string(), "gemm-sweep", "--sizes", "64"});
    REQUIRE(r.code == 0);
    CHECK(parse_csv(r.out)[1][1] == "DM");

    r = cli({"--config", bad.string(), "gemm-sweep", "--sizes", "64"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("line 2") != std::string::npos);

    ::setenv("MATRIXFLOW_CONFIG", good.string().c_str(), 1);
    r = cli({"gemm-sweep", "--sizes", "64"});
    ::unsetenv("MATRIXFLOW_CONFIG");
    REQUIRE(r.code == 0);
    CHECK(parse_csv(r.out)[1][1] == "DM");
    fs::remove_all(dir);
  }

  TEST_CASE("output files are byte-identical across repeats and job counts") {
    const fs::path dir = temp_dir();
    const std::vector<std::string> sweep = {"gemm-sweep", "--sizes", "64,200,128,96"};
    auto with = [&](const std::string& name, const std::string& jobs) {
      std::vector<std::string> args = {"--out", (dir / name).string(), "--jobs", jobs};
      args.insert(args.end(), sweep.begin(), sweep.end());
      REQUIRE(cli(args).code == 0);
      return slurp(dir / name);
    };
    const std::string a = with("a.csv", "1");
    CHECK(a == with("b.csv", "1"));
    CHECK(a == with("c.csv", "4"));
    fs::remove_all(dir);
  }

  TEST_CASE("dtype and pcie sweeps") {
    Run r = cli({"dtype-sweep", "--size", "128"});
    REQUIRE(r.code == 0);
    auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].back() == "power_mw");
    CHECK(rows[5][2] == "fp32");
    CHECK(rows[5].back() == "320.32");

    r = cli({"pcie-sweep", "--size", "256"});
    REQUIRE(r.code == 0);
    rows = parse_csv(r.out);
    REQUIRE(rows.size() == 4);
    CHECK(std::stod(rows[1][5]) < std::stod(rows[2][5]));
    CHECK(std::stod(rows[2][5]) < std::stod(rows[3][5]));
    CHECK(rows[1][2] == "64");
    CHECK(rows[3][2] == "5");
  }

  TEST_CASE("transformer JSON and CSV") {
    const fs::path dir = temp_dir();
    const fs::path csv = dir / "bd.csv";
    const Run r = cli({"transformer", "--model", "bert-medium", "--seq-len", "32", "--csv", csv.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["model"]["seq_len"] == 32);
    CHECK(j["speedup"].get<double>() > 1.0);
    const std::string text = slurp(csv);
    CHECK(text.rfind("label,category,ns,percent\n", 0) == 0);
    double pct = 0;
    for (const auto& row : j["breakdown"]) pct += row["percent"].get<double>();
    CHECK(pct == doctest::Approx(100.0));
    fs::remove_all(dir);
  }

  TEST_CASE("models listing") {
    const Run r = cli({"models"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out).size() == 6);
  }
}
