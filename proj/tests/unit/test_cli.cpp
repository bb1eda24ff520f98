#include "pvqe/cli.hpp"

#include "pvqe/csv.hpp"
#include "pvqe/error.hpp"
#include "pvqe/hamiltonians.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace pvqe;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("pvqe_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string &name) const { return (path_ / name).string(); }

private:
  fs::path path_;
};

std::string slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string &path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

int run(std::vector<std::string> args, std::string *out_text = nullptr, std::string *err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = dispatch(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

} // namespace

TEST(Csv, NumbersAndQuoting) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-INFINITY), "-inf");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_field("plain"), "plain");
}

TEST(EmitCurve, HeaderOnlyAndRows) {
  TempDir d;
  CsvTable t;
  t.header = {"x", "y"};
  emit_curve(t, d.file("empty.csv"));
  EXPECT_EQ(slurp(d.file("empty.csv")), "x,y\n");
  t.add_numbers({1.0, 2.5});
  emit_curve(t, d.file("one.csv"));
  EXPECT_EQ(slurp(d.file("one.csv")), "x,y\n1,2.5\n");
  EXPECT_THROW(t.add_row({"only one"}), Error);
  EXPECT_THROW(emit_curve(t, d.file("missing/dir/x.csv")), Error);
}

TEST(Manifest, Json) {
  RunManifest m{"mesh", "", 7, "/tmp/x", "0.1.0", "2026-01-01T00:00:00Z"};
  const std::string j = m.to_json();
  EXPECT_NE(j.find("\"command\": \"mesh\""), std::string::npos);
  EXPECT_NE(j.find("\"seed\": 7"), std::string::npos);
}

TEST(Dispatch, ExitCodes) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"mesh", "--bogus"}), 1);
  EXPECT_EQ(run({"--help"}), 0);
  std::string out;
  EXPECT_EQ(run({"--version"}, &out), 0);
  EXPECT_NE(out.find(version_string()), std::string::npos);
  TempDir d;
  EXPECT_EQ(run({"mesh", "--modes", "12", "--out", d.str()}), 1);
  EXPECT_EQ(run({"run", "--out", d.str()}), 1);
  EXPECT_EQ(run({"mesh", "--unitary", d.file("nope.txt"), "--out", d.str()}), 2);

  std::ofstream(d.file("bad.json")) << R"({"hamiltonian": {"builder": "h2"}, "optimiser": {}})";
  std::string err;
  EXPECT_EQ(run({"run", "--config", d.file("bad.json"), "--out", d.str()}, nullptr, &err), 1);
  EXPECT_NE(err.find("optimiser"), std::string::npos);
}

TEST(Schwinger, SweepMatchesExactLevels) {
  TempDir d;
  ASSERT_EQ(run({"schwinger", "--steps", "5", "--out", d.str()}), 0);
  const auto rows = read_csv(d.file("schwinger.csv"));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"m", "E_vqe", "E_exact"}));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double m = std::stod(rows[i][0]);
    EXPECT_NEAR(std::stod(rows[i][1]), schwinger_exact_levels(m)[0], 1e-2);
    EXPECT_NEAR(std::stod(rows[i][2]), schwinger_exact_levels(m)[0], 1e-10);
  }
  EXPECT_TRUE(fs::exists(d.file("manifest.json")));
}

TEST(Schwinger, NoisyRunsAddRawColumn) {
  TempDir d;
  ASSERT_EQ(run({"schwinger", "--steps", "2", "--noise", "white", "--zne", "0.1,0.2", "--out", d.str()}), 0);
  const auto rows = read_csv(d.file("schwinger.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].back(), "E_raw");
}

TEST(Factor, DominantOutcomesAreTheFactors) {
  TempDir d;
  std::string out;
  ASSERT_EQ(run({"factor", "--out", d.str()}, &out), 0);
  const std::string j = slurp(d.file("factor.json"));
  EXPECT_NE(j.find("\"01\""), std::string::npos);
  EXPECT_NE(j.find("\"10\""), std::string::npos);
  EXPECT_NE(j.find("\"dominant\""), std::string::npos);
  EXPECT_NE(out.find("factors"), std::string::npos);
}

TEST(Mesh, BalancedLayoutWinsAndResidualsVanish) {
  TempDir d;
  ASSERT_EQ(run({"mesh", "--modes", "6", "--samples", "10", "--out", d.str()}), 0);
  const auto rows = read_csv(d.file("mesh.csv"));
  ASSERT_EQ(rows.size(), 12u);
  const auto &mean = rows.back();
  EXPECT_EQ(mean[0], "mean");
  EXPECT_GT(std::stod(mean[1]), std::stod(mean[2]));
  EXPECT_LT(std::stod(mean[3]), 1e-10);
  EXPECT_LT(std::stod(mean[4]), 1e-10);
}

TEST(Dissociation, H2Curve) {
  TempDir d;
  ASSERT_EQ(run({"dissociation", "--molecule", "H2", "--out", d.str()}), 0);
  const auto rows = read_csv(d.file("dissociation.csv"));
  ASSERT_GT(rows.size(), 10u);
  EXPECT_EQ(rows[0][0], "bond_length");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][3]), 1.6e-3) << rows[i][0];
}

TEST(Calibrate, WritesConfusionMatrix) {
  TempDir d;
  ASSERT_EQ(run({"calibrate", "--qubits", "1", "--flip", "0.1", "--shots", "20000", "--out", d.str()}), 0);
  const auto rows = read_csv(d.file("confusion.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(std::stod(rows[0][0]), 0.9, 0.02);
  EXPECT_EQ(run({"calibrate", "--flip", "0.7", "--out", d.str()}), 1);
}

TEST(Run, ConfigFileProducesTraceAndSummary) {
  TempDir d;
  std::ofstream(d.file("cfg.json"))
      << R"({"hamiltonian": {"builder": "heisenberg", "w": [1, 1, 1]}, "optimizer": {"method": "nelder_mead"}})";
  ASSERT_EQ(run({"run", "--config", d.file("cfg.json"), "--out", d.str()}), 0);
  const std::string s = slurp(d.file("summary.json"));
  EXPECT_NE(s.find("\"final_energy\""), std::string::npos);
  const auto trace = read_csv(d.file("trace.csv"));
  EXPECT_EQ(trace[0][0], "iter");
}

TEST(Determinism, IdenticalArtifacts) {
  TempDir a, b;
  ASSERT_EQ(run({"schwinger", "--steps", "3", "--backend", "sampled", "--seed", "5", "--out", a.str()}), 0);
  ASSERT_EQ(run({"schwinger", "--steps", "3", "--backend", "sampled", "--seed", "5", "--out", b.str()}), 0);
  EXPECT_EQ(slurp(a.file("schwinger.csv")), slurp(b.file("schwinger.csv")));
  ASSERT_EQ(run({"mesh", "--samples", "4", "--out", a.str()}), 0);
  ASSERT_EQ(run({"mesh", "--samples", "4", "--out", b.str()}), 0);
  EXPECT_EQ(slurp(a.file("mesh.csv")), slurp(b.file("mesh.csv")));
}

TEST(Binary, ExitCodesThroughTheShell) {
  const char *cli = PVQE_CLI_PATH;
  const std::string base = std::string(cli) + " >/dev/null 2>&1";
  auto code = [](const std::string &cmd) {
    const int s = std::system(cmd.c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(code(std::string(cli) + " --version >/dev/null 2>&1"), 0);
  EXPECT_EQ(code(base), 1);
  EXPECT_EQ(code(std::string(cli) + " nonsense >/dev/null 2>&1"), 1);
}
