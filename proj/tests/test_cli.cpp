#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("gapbound_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

int run(const std::string& args) {
  const std::string cmd = std::string(GAPBOUND_CLI) + " " + args + " 2>" + quote((workdir() / "stderr").string());
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const std::string kStep1 = quote(R"({"model":"step","cut":1.0})");

}  // namespace

TEST(Cli, ScanCsvHeaderAndRows) {
  const fs::path out = workdir() / "scan.csv";
  ASSERT_EQ(run("scan --model " + kStep1 + " --n 8 --interval 0 1 --grid 513 --out " + quote(out.string())), 0);
  std::ifstream f(out);
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "lambda,f,f_prime");
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 513);
  EXPECT_FALSE(fs::exists(out.string() + ".tmp"));
}

TEST(Cli, ScanNearIdentityCoefficient) {
  const fs::path out = workdir() / "ident.csv";
  ASSERT_EQ(run("scan --model " + quote(R"({"model":"step","cut":3.14159})") + " --n 4 --interval 0 2 --grid 21 --out " +
                quote(out.string())),
            0);
  std::ifstream f(out);
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    const double lambda = std::stod(line.substr(0, line.find(',')));
    const double fv = std::stod(line.substr(line.find(',') + 1));
    EXPECT_NEAR(fv, std::abs(1.0 - lambda), 1e-4) << line;
  }
}

TEST(Cli, DeterministicOutput) {
  const fs::path a = workdir() / "a.json", b = workdir() / "b.json";
  const std::string args = "enclose --model " + kStep1 + " --n 8,12 --out ";
  ASSERT_EQ(run(args + quote(a.string())), 0);
  ASSERT_EQ(run(args + quote(b.string())), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  const fs::path c = workdir() / "c.csv", d = workdir() / "d.csv";
  ASSERT_EQ(run("scan --model " + kStep1 + " --n 8 --out " + quote(c.string())), 0);
  ASSERT_EQ(run("scan --model " + kStep1 + " --n 8 --out " + quote(d.string())), 0);
  EXPECT_EQ(slurp(c), slurp(d));
}

TEST(Cli, EncloseReportShape) {
  const fs::path out = workdir() / "enc.json";
  ASSERT_EQ(run("enclose --model " + kStep1 + " --n 8 --out " + quote(out.string())), 0);
  const json j = json::parse(slurp(out));
  EXPECT_EQ(j["command"], "enclose");
  EXPECT_EQ(j["config"]["model"]["cut"], 1.0);
  const auto& r = j["result"];
  EXPECT_EQ(r["assumed_H"], true);
  ASSERT_EQ(r["intervals"].size(), 1u);
  const double lo = r["intervals"][0]["lower"], hi = r["intervals"][0]["upper"];
  EXPECT_GE(lo, 0.681687);
  EXPECT_LE(hi, 0.681691);
  EXPECT_TRUE(r.contains("history"));
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const fs::path cfg = workdir() / "cfg.json", out = workdir() / "cfg_out.json";
  std::ofstream(cfg) << R"({"model":{"model":"step","cut":1.0},"n":[4],"nu":0.0,"mu":1.0})";
  ASSERT_EQ(run("bounds --config " + quote(cfg.string()) + " --n 8 --out " + quote(out.string())), 0);
  const json j = json::parse(slurp(out));
  EXPECT_EQ(j["config"]["n"], json::array({8}));
  EXPECT_EQ(j["result"][0]["dim"], 8);
  EXPECT_LE(j["result"][0]["lower"].get<double>(), 0.6816901138162093 + 1e-12);
  EXPECT_GE(j["result"][0]["upper"].get<double>(), 0.6816901138162093 - 1e-12);
}

TEST(Cli, CompareDiscrepancySmall) {
  const fs::path out = workdir() / "cmp.json";
  ASSERT_EQ(run("compare --model " + kStep1 + " --n 8 --nu 0 --mu 1 --out " + quote(out.string())), 0);
  const json j = json::parse(slurp(out));
  EXPECT_LT(j["result"][0]["max_discrepancy"].get<double>(), 1e-9);
}

TEST(Cli, ExitCodes) {
  const fs::path out = workdir() / "never.json";
  EXPECT_EQ(run("compare --model " + kStep1 + " --n 8 --nu 1.5 --mu 2 --out " + quote(out.string())), 4);
  EXPECT_FALSE(fs::exists(out));
  EXPECT_EQ(run("scan --model " + quote(R"({"model":"cubic"})") + " --n 4"), 2);
  EXPECT_EQ(run("scan --model " + kStep1 + " --n 4 --interval 1 0"), 2);
  EXPECT_EQ(run("scan --model " + kStep1), 2);
  EXPECT_EQ(run("scan --model " + kStep1 + " --n 4 --tol -1"), 2);
  EXPECT_EQ(run("nonsense"), 2);
  EXPECT_EQ(run("enclose --model " + kStep1 + " --n 8 --interval 0.69 0.70"), 3);
}

TEST(Cli, HypothesisViolationWritesIndices) {
  const fs::path out = workdir() / "h.json";
  // Two Ritz values with residual 0.1, 0.1 apart: the outer intervals overlap.
  const std::string pair = R"({"model":"pair","m":[[0.45,0],[0,0.55]],"d":[[0.2125,0],[0,0.3125]]})";
  ASSERT_EQ(run("enclose --model " + quote(pair) + " --interval 0 1 --spurious-threshold 10 --out " + quote(out.string())), 4);
  const json j = json::parse(slurp(out));
  EXPECT_EQ(j["result"]["assumed_H"], false);
  EXPECT_EQ(j["result"]["refuting_indices"], json::array({2}));
}

TEST(Cli, PolluteTableAndCollapseDemo) {
  const fs::path out = workdir() / "pol.csv";
  ASSERT_EQ(run("pollute --model " + quote(R"({"model":"step","cut":1.5707963267948966})") +
                " --n 50 --format csv --collapse 6 --out " + quote(out.string())),
            0);
  const json j = json::parse(slurp(out.string() + ".json"));
  const auto& near = j["result"]["ritz"][0]["nearest"];
  ASSERT_EQ(near.size(), 4u);
  EXPECT_NEAR(near[1]["ritz"].get<double>(), 0.4632, 5e-5);
  for (const auto& v : j["result"]["collapse"]["ritz_values"]) EXPECT_NEAR(v.get<double>(), 0.3, 1e-12);
  EXPECT_LT(j["result"]["collapse"]["max_deviation"].get<double>(), 1e-12);
}
