#include "tdirac/cli.hpp"

#include <gtest/gtest.h>

using namespace tdirac;
using nlohmann::json;

namespace {

std::string fixture(const std::string& name) { return std::string(TDIRAC_MODEL_DIR) + "/" + name + ".json"; }

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "tdirac");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

}  // namespace

TEST(Config, KRangeParsing) {
  EXPECT_EQ(cli::parse_k_range("1..4"), std::make_pair(1, 4));
  EXPECT_EQ(cli::parse_k_range("3"), std::make_pair(3, 3));
  EXPECT_EQ(cli::parse_k_range("3..1"), std::make_pair(3, 1));
  for (const char* bad : {"", "a..2", "1..", "1...2", "1-2", "1..2x"}) EXPECT_THROW(cli::parse_k_range(bad), std::invalid_argument) << bad;
}

TEST(Config, Invariants) {
  cli::RunConfig c;
  EXPECT_NO_THROW(cli::check_config(c));
  auto bad = [&](auto mutate) {
    cli::RunConfig d = c;
    mutate(d);
    EXPECT_THROW(cli::check_config(d), std::invalid_argument);
  };
  bad([](cli::RunConfig& d) { d.k_min = 2, d.k_max = 1; });
  bad([](cli::RunConfig& d) { d.N = 2; });
  bad([](cli::RunConfig& d) { d.N = 9; });
  bad([](cli::RunConfig& d) { d.trials = -1; });
  bad([](cli::RunConfig& d) { d.tol = 1.5; });
  bad([](cli::RunConfig& d) { d.format = "xml"; });
}

TEST(Verify, HeisenbergReportsNinePasses) {
  const auto r = run({"verify", "--model", fixture("heisenberg"), "--no-timing"});
  EXPECT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["passed"], 9);
  EXPECT_EQ(j["result"], "pass");
  EXPECT_FALSE(j.contains("runtime_ms"));
  for (const auto& item : j["identities"]) {
    EXPECT_FALSE(item["anchor"].get<std::string>().empty());
    EXPECT_TRUE(item.contains("residual_exact"));
  }
}

TEST(Verify, SolMarksBasicTauCorollary) {
  const auto r = run({"verify", "--model", fixture("sol"), "--no-timing"});
  EXPECT_EQ(r.code, 0);
  bool found = false;
  const json j = json::parse(r.out);
  for (const auto& item : j["identities"])
    if (item["label"] == "i") {
      found = true;
      EXPECT_EQ(item["note"], "pass (τ basic)");
    }
  EXPECT_TRUE(found);
}

TEST(Verify, InvalidModelNamesTheCondition) {
  const auto r = run({"verify", "--model", fixture("bad_bundlelike")});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(contains(r.err, "bundle-like")) << r.err;
  EXPECT_EQ(run({"verify", "--model", fixture("missing")}).code, 2);
  EXPECT_EQ(run({"verify"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
}

TEST(Verify, MutatedModelFailsWithLocalizedResidual) {
  const auto r = run({"verify", "--model", fixture("t3_landau_mutated"), "--no-timing"});
  EXPECT_EQ(r.code, 1);
  const json j = json::parse(r.out);
  bool a_failed = false;
  for (const auto& item : j["identities"])
    if (item["label"] == "a") {
      a_failed = item["status"] == "fail";
      ASSERT_EQ(item["nonzero_monomials"].size(), 1u);
      EXPECT_EQ(item["nonzero_monomials"][0]["monomial"], "1");
      EXPECT_EQ(item["nonzero_monomials"][0]["residual"], "1/4");
    }
  EXPECT_TRUE(a_failed);
}

TEST(Gap, LandauRowsAndCsvColumns) {
  const auto r = run({"gap", "--model", fixture("t3_landau"), "--k", "1..2", "--N", "16", "--format", "csv", "--no-timing"});
  EXPECT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k,N,gap,2km,fitted_C,kernel_odd,kernel_even,runtime_ms");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    ASSERT_EQ(cells.size(), 8u) << line;
    const int k = std::stoi(cells[0]);
    EXPECT_EQ(k, rows);
    EXPECT_NEAR(std::stod(cells[2]), 4 * std::numbers::pi * k, 0.05 * 4 * std::numbers::pi * k);
    EXPECT_EQ(cells[5], "0");
    EXPECT_EQ(cells[6], std::to_string(k));
    EXPECT_EQ(cells[7], "");
  }
  EXPECT_EQ(rows, 2);
}

TEST(Gap, CoarseGridWarnsAndZeroTwistNotes) {
  const auto coarse = run({"gap", "--model", fixture("t3_landau"), "--k", "1", "--N", "6", "--tol", "0.5"});
  EXPECT_EQ(coarse.code, 0);
  EXPECT_TRUE(contains(coarse.err, "grid below resolution heuristic"));
  const auto zero = run({"gap", "--model", fixture("t3_landau"), "--k", "0..0", "--N", "8"});
  EXPECT_EQ(zero.code, 0);
  EXPECT_TRUE(contains(zero.err, "vanishing asserted only for large k"));
  EXPECT_EQ(json::parse(zero.out)["rows"][0]["kernel_odd"], 1);
}

TEST(Gap, ToleranceControlsVerdict) {
  // At N = 6 the k = 1 gap sits about 5.4% below 4π.
  EXPECT_EQ(run({"gap", "--model", fixture("t3_landau"), "--k", "1", "--N", "6", "--tol", "0.01"}).code, 1);
  EXPECT_EQ(run({"gap", "--model", fixture("t3_landau"), "--k", "1", "--N", "6", "--tol", "0.1"}).code, 0);
}

TEST(Gap, InputErrors) {
  EXPECT_EQ(run({"gap", "--model", fixture("t3_landau"), "--k", "3..1", "--N", "8"}).code, 2);
  EXPECT_EQ(run({"gap", "--model", fixture("t3_landau"), "--N", "7"}).code, 2);
  EXPECT_EQ(run({"gap", "--model", fixture("heisenberg")}).code, 2);
  EXPECT_EQ(run({"gap", "--model", fixture("t3_landau"), "--format", "xml"}).code, 2);
}

TEST(Fiber, BatteryPassesAndIsDeterministic) {
  const auto a = run({"fiber", "--q", "4", "--trials", "50", "--seed", "7", "--no-timing"});
  const auto b = run({"fiber", "--q", "4", "--trials", "50", "--seed", "7", "--no-timing"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const json j = json::parse(a.out);
  EXPECT_EQ(j["passed"], 50);
  EXPECT_TRUE(j["violations"].empty());
}

TEST(Fiber, OddCodimensionAndZeroTrials) {
  const auto odd = run({"fiber", "--q", "3", "--trials", "10"});
  EXPECT_EQ(odd.code, 2);
  EXPECT_TRUE(contains(odd.err, "codimension must be even"));
  const auto none = run({"fiber", "--q", "2", "--trials", "0"});
  EXPECT_EQ(none.code, 0);
  EXPECT_TRUE(contains(none.err, "zero trials"));
  EXPECT_EQ(json::parse(none.out)["passed"], 0);
}

TEST(Crosscheck, LandauPassesAndMutationFails) {
  const auto ok = run({"crosscheck", "--model", fixture("t3_landau"), "--N", "8", "--trials", "20", "--no-timing"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  const json good = json::parse(ok.out);
  for (const auto& item : good["identities"]) EXPECT_LE(item["relative_residual"].get<double>(), 1e-8);
  const auto single = run({"crosscheck", "--model", fixture("t3_landau"), "--N", "8", "--trials", "1"});
  EXPECT_EQ(single.code, 0);
  EXPECT_TRUE(contains(single.err, "single"));
  const auto bad = run({"crosscheck", "--model", fixture("t3_landau_mutated"), "--N", "8", "--trials", "5"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_TRUE(contains(bad.err, "cross-validation residuals"));
  const json failed = json::parse(bad.out);
  for (const auto& item : failed["identities"]) {
    if (item["label"] == "a") {
      EXPECT_EQ(item["status"], "fail");
    }
  }
}

TEST(Output, AtomicFileAndByteIdenticalReports) {
  const auto dir = std::filesystem::temp_directory_path() / "tdirac_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "report.json").string();
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    const auto r = run({"verify", "--model", fixture("sol"), "--no-timing", "--out", path});
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
    std::ifstream in(path);
    const std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(json::parse(content)["passed"], 9);
    if (rep == 0) {
      first = content;
    } else {
      EXPECT_EQ(content, first);
    }
  }
  EXPECT_EQ(run({"verify", "--model", fixture("sol"), "--out", (dir / "no_such_dir" / "r.json").string()}).code, 2);
  std::filesystem::remove_all(dir);
}
