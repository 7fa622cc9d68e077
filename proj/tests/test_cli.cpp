#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  const std::string cmd = std::string(SYMTREE_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), p)) r.out += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int lines(const fs::path& p) {
  const std::string s = slurp(p);
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("symtree_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

const std::string kConfigs = SYMTREE_CONFIG_DIR;

}  // namespace

TEST_F(Cli, GenerateFitPredict) {
  CliRun g = run("generate --case viscosity --n 40 --seed 0 --out " + path("v.csv"));
  ASSERT_EQ(g.code, 0) << g.out;
  EXPECT_EQ(lines(path("v.csv")), 41);

  CliRun f = run("fit --data " + path("v.csv") + " --config " + kConfigs + "/viscosity.ini --out " + path("m.json"));
  ASSERT_EQ(f.code, 0) << f.out;
  EXPECT_NE(f.out.find("3.4*log10(M) - 11.28 if log10(M) >= "), std::string::npos) << f.out;
  EXPECT_NE(f.out.find("status: optimal"), std::string::npos);

  CliRun p = run("predict --model " + path("m.json") + " --data " + path("v.csv") + " --out " + path("p.csv"));
  ASSERT_EQ(p.code, 0) << p.out;
  EXPECT_EQ(lines(path("p.csv")), 41);
  EXPECT_EQ(slurp(path("p.csv")).rfind("leaf,prediction\n", 0), 0u);
}

TEST_F(Cli, GenerateIsDeterministic) {
  ASSERT_EQ(run("generate --case case1 --n 30 --seed 5 --out " + path("a.csv")).code, 0);
  ASSERT_EQ(run("generate --case case1 --n 30 --seed 5 --out " + path("b.csv")).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  ASSERT_EQ(run("generate --case two-tank --n 80 --out " + path("t.csv")).code, 0);
  EXPECT_EQ(lines(path("t.csv")), 81);
}

TEST_F(Cli, EmptyDatasetIsAUserError) {
  std::ofstream(path("empty.csv")) << "M,y\n";
  ASSERT_EQ(run("generate --case viscosity --n 10 --out " + path("v.csv")).code, 0);
  ASSERT_EQ(run("fit --data " + path("v.csv") + " --config " + kConfigs + "/viscosity.ini --out " + path("m.json")).code, 0);
  CliRun p = run("predict --model " + path("m.json") + " --data " + path("empty.csv") + " --out " + path("p.csv"));
  EXPECT_EQ(p.code, 1);
  EXPECT_NE(p.out.find("empty dataset"), std::string::npos) << p.out;
  CliRun f = run("fit --data " + path("empty.csv") + " --config " + kConfigs + "/viscosity.ini --out " + path("m2.json"));
  EXPECT_EQ(f.code, 1);
  EXPECT_NE(f.out.find("empty dataset"), std::string::npos) << f.out;
}

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("generate --case case9 --n 3 --out x.csv").code, 1);
  EXPECT_EQ(run("fit --data /nonexistent.csv --config /nonexistent.ini").code, 1);
  EXPECT_EQ(run("eval --experiment fig9 --out " + path("o")).code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, BadConfigIsAUserError) {
  ASSERT_EQ(run("generate --case viscosity --n 10 --out " + path("v.csv")).code, 0);
  std::ofstream(path("bad.ini")) << "[basis]\nbranch = log10(Q)\nleaf = 1\n";
  CliRun f = run("fit --data " + path("v.csv") + " --config " + path("bad.ini") + " --out " + path("m.json"));
  EXPECT_EQ(f.code, 1) << f.out;
  std::ofstream(path("bad2.ini")) << "[basis]\nbranch = M\nleaf = 1\ncolour = red\n";
  f = run("fit --data " + path("v.csv") + " --config " + path("bad2.ini") + " --out " + path("m.json"));
  EXPECT_EQ(f.code, 1) << f.out;
}

TEST_F(Cli, ModelFileErrorsAreUserErrors) {
  ASSERT_EQ(run("generate --case viscosity --n 10 --out " + path("v.csv")).code, 0);
  std::ofstream(path("m.json")) << "{\"depth\": 1}";
  CliRun p = run("predict --model " + path("m.json") + " --data " + path("v.csv") + " --out " + path("p.csv"));
  EXPECT_EQ(p.code, 1) << p.out;
}

TEST_F(Cli, ExportMatchesFitExport) {
  ASSERT_EQ(run("generate --case case1 --n 12 --seed 2 --out " + path("c.csv")).code, 0);
  const std::string cfg = kConfigs + "/case1.ini";
  CliRun e = run("export-mps --data " + path("c.csv") + " --config " + cfg + " --out " + path("a.mps"));
  ASSERT_EQ(e.code, 0) << e.out;
  CliRun f = run("fit --data " + path("c.csv") + " --config " + cfg + " --solver export-only --mps " + path("b.mps"));
  ASSERT_EQ(f.code, 0) << f.out;
  EXPECT_EQ(slurp(path("a.mps")), slurp(path("b.mps")));
  EXPECT_NE(slurp(path("a.mps")).find("ENDATA"), std::string::npos);
  EXPECT_EQ(run("fit --data " + path("c.csv") + " --config " + cfg + " --solver export-only").code, 1);
}

TEST_F(Cli, EvalWritesReproducibleCsv) {
  std::ofstream(path("small.ini")) << "[experiment]\nsizes = 20\n";
  ASSERT_EQ(run("eval --experiment viscosity --config " + path("small.ini") + " --out " + path("a")).code, 0);
  ASSERT_EQ(run("eval --experiment viscosity --config " + path("small.ini") + " --out " + path("b")).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "viscosity.csv"), slurp(dir_ / "b" / "viscosity.csv"));
  EXPECT_EQ(lines(dir_ / "a" / "viscosity.csv"), 2);
}
