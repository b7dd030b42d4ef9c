#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "ncflab-cli-test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + NCFLAB_BIN + "\" " + args + " > \"" + (work() / "stdout.txt").string() +
                          "\" 2> \"" + (work() / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_cfg(const std::string& name, const std::string& text) {
  const fs::path p = work() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST(Cli, EmptyExperimentListSucceeds) {
  const fs::path cfg = write_cfg("empty.cfg", "[run]\nexperiments = []\n");
  EXPECT_EQ(run("--out \"" + (work() / "o1").string() + "\" run \"" + cfg.string() + "\""), 0);
  EXPECT_TRUE(fs::exists(work() / "o1" / "run" / "results.json"));
}

TEST(Cli, UnknownKeyIsRejectedBeforeRunning) {
  const fs::path cfg = write_cfg("bad.cfg", "[run]\nexperiments = [\"partition\"]\n[partition]\nsampels = 3\n");
  EXPECT_EQ(run("--out \"" + (work() / "o2").string() + "\" run \"" + cfg.string() + "\""), 2);
  EXPECT_NE(slurp(work() / "stderr.txt").find("sampels"), std::string::npos);
  EXPECT_FALSE(fs::exists(work() / "o2" / "run" / "partition.csv"));
}

TEST(Cli, UnknownExperimentIsRejected) {
  const fs::path cfg = write_cfg("unknown.cfg", "[run]\nexperiments = [\"nope\"]\n");
  EXPECT_EQ(run("run \"" + cfg.string() + "\""), 2);
}

TEST(Cli, MissingConfigIsInvalidInput) {
  EXPECT_EQ(run("run \"" + (work() / "absent.cfg").string() + "\""), 2);
}

TEST(Cli, InterpWritesTable) {
  EXPECT_EQ(run("--out \"" + (work() / "o3").string() + "\" interp --m0 const:1 --m1 const:2.718281828459045 --t-grid 3"),
            0);
  const std::string csv = slurp(work() / "o3" / "interp.csv");
  EXPECT_EQ(csv.rfind("t,M\n", 0), 0u);
  EXPECT_NE(csv.find("0.25,1.28402541"), std::string::npos) << csv;
}

TEST(Cli, BadMajorantSpecIsInvalidInput) {
  EXPECT_EQ(run("interp --m0 gauss:1:100 --m1 const:1"), 2);
}

TEST(Cli, FailedAssertionGivesExitOneUnlessDisabled) {
  const std::string body = "[partition]\nsamples = 20\ntol = 0\n";
  const fs::path strict = write_cfg("strict.cfg", "[run]\nexperiments = [\"partition\"]\n" + body);
  const fs::path loose = write_cfg("loose.cfg", "[run]\nexperiments = [\"partition\"]\n" + body + "assert = false\n");
  EXPECT_EQ(run("--out \"" + (work() / "o4").string() + "\" run \"" + strict.string() + "\""), 1);
  EXPECT_EQ(run("--out \"" + (work() / "o5").string() + "\" run \"" + loose.string() + "\""), 0);
}

TEST(Cli, RunIsDeterministic) {
  const fs::path cfg =
      write_cfg("det.cfg", "[run]\nexperiments = [\"partition\"]\nseed = 77\noutput = \"det\"\n[partition]\nsamples = 100\n");
  ASSERT_EQ(run("--out \"" + (work() / "d1").string() + "\" run \"" + cfg.string() + "\""), 0);
  ASSERT_EQ(run("--out \"" + (work() / "d2").string() + "\" run \"" + cfg.string() + "\""), 0);
  const std::string a = slurp(work() / "d1" / "det" / "partition.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(work() / "d2" / "det" / "partition.csv"));
}

TEST(Cli, FuzzRequiresKind) {
  EXPECT_EQ(run("fuzz --trials 3"), 2);
  EXPECT_EQ(run("--out \"" + (work() / "o6").string() + "\" fuzz --kind trace-cs --trials 20 --dim 3"), 0);
}

TEST(Cli, UsageErrorsExitTwoAndHelpExitsZero) {
  EXPECT_EQ(run("--no-such-flag"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("interp --t-grid abc"), 2);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("kakeya --help"), 0);
}

TEST(Cli, ListOptionsAcceptCommasOrSpaces) {
  ASSERT_EQ(run("--out \"" + (work() / "c1").string() + "\" riesz-exponents --lambda-list 0.1,0.25 --eps 0.05"), 0);
  ASSERT_EQ(run("--out \"" + (work() / "c2").string() + "\" riesz-exponents --lambda-list 0.1 0.25 --eps 0.05"), 0);
  const std::string a = slurp(work() / "c1" / "riesz-exponents.csv");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 3);
  EXPECT_EQ(a, slurp(work() / "c2" / "riesz-exponents.csv"));
}

TEST(Cli, KernelLevelWithoutSectorsIsInvalidInput) {
  EXPECT_EQ(run("audit kernel-l1 --k-list 4 --lambda 0.5"), 2);
}
