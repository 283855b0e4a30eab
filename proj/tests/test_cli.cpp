#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("relurec_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  std::string cmd = std::string("\"") + RELUREC_CLI_PATH + "\" " + args + " > \"" +
                    (work_dir() / "last.log").string() + "\" 2>&1";
  int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, GenIsDeterministic) {
  fs::path a = work_dir() / "gen_a", b = work_dir() / "gen_b";
  ASSERT_EQ(run("gen --seed 5 --out " + q(a)), 0);
  ASSERT_EQ(run("gen --seed 5 --out " + q(b)), 0);
  for (const char* f : {"X.txt", "A.txt", "U.txt", "V.txt", "E.txt", "manifest.json"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  EXPECT_NE(slurp(a / "manifest.json").find("\"seed\": 5"), std::string::npos);
}

TEST(Cli, MissingSeedIsAUsageError) { EXPECT_EQ(run("gen --out " + q(work_dir() / "noseed")), 2); }

TEST(Cli, UnknownAlgorithmIsAUsageError) {
  fs::path inst = work_dir() / "inst_algo";
  ASSERT_EQ(run("gen --seed 1 --out " + q(inst)), 0);
  put(work_dir() / "algo.json", "{\"instance\": " + q(inst) + "}");
  EXPECT_EQ(run("recover --seed 1 --algo nonsense --config " + q(work_dir() / "algo.json") + " --out " +
                q(work_dir() / "algo_out")),
            2);
}

TEST(Cli, FlagsOverrideConfig) {
  put(work_dir() / "gen.json", "{\"m\": 5, \"seed\": 9}");
  fs::path out = work_dir() / "gen_cfg";
  ASSERT_EQ(run("gen --config " + q(work_dir() / "gen.json") + " --seed 3 --out " + q(out)), 0);
  std::string man = slurp(out / "manifest.json");
  EXPECT_NE(man.find("\"m\": 5"), std::string::npos);
  EXPECT_NE(man.find("\"seed\": 3"), std::string::npos);
  EXPECT_EQ(slurp(out / "A.txt").substr(0, 2), "5 ");
}

TEST(Cli, RecoverThenEval) {
  fs::path inst = work_dir() / "inst_rec", rec = work_dir() / "rec", ev = work_dir() / "ev";
  ASSERT_EQ(run("gen --seed 2 --out " + q(inst)), 0);
  put(work_dir() / "rec.json", "{\"instance\": " + q(inst) + "}");
  ASSERT_EQ(run("recover --seed 2 --algo worstcase --config " + q(work_dir() / "rec.json") + " --out " + q(rec)), 0);
  EXPECT_TRUE(fs::exists(rec / "U_hat.txt"));
  EXPECT_TRUE(fs::exists(rec / "V_hat.txt"));
  put(work_dir() / "ev.json", "{\"instance\": " + q(inst) + ", \"weights\": " + q(rec) + "}");
  ASSERT_EQ(run("eval --config " + q(work_dir() / "ev.json") + " --out " + q(ev)), 0);
  std::istringstream metrics(slurp(ev / "metrics.txt"));
  std::string name;
  double value = -1;
  bool seen = false;
  while (metrics >> name) {
    if (name == "functional_rel") {
      metrics >> value;
      seen = true;
    } else {
      std::string rest;
      std::getline(metrics, rest);
    }
  }
  ASSERT_TRUE(seen);
  EXPECT_LE(value, 1e-6);
}

TEST(Cli, HardnessReduceAndVerify) {
  fs::path cnf = work_dir() / "f.cnf", out = work_dir() / "hard";
  put(cnf, "p cnf 3 1\n1 2 3 1 2 3 0\n");
  put(work_dir() / "hard.json", "{\"cnf\": " + q(cnf) + "}");
  ASSERT_EQ(run("hardness --config " + q(work_dir() / "hard.json") + " --out " + q(out)), 0);
  ASSERT_TRUE(fs::exists(out / "witness_x.txt"));
  put(work_dir() / "ver.json", "{\"mode\": \"verify\", \"instance\": " + q(out) + ", \"x\": " +
                                   q(out / "witness_x.txt") + ", \"y\": " + q(out / "witness_y.txt") + "}");
  EXPECT_EQ(run("hardness --config " + q(work_dir() / "ver.json") + " --out " + q(work_dir() / "ver")), 0);
  put(work_dir() / "bad.json", "{\"mode\": \"verify\", \"instance\": " + q(out) + ", \"x\": " +
                                   q(out / "witness_x.txt") + ", \"y\": " + q(out / "witness_x.txt") + "}");
  EXPECT_EQ(run("hardness --config " + q(work_dir() / "bad.json") + " --out " + q(work_dir() / "bad")), 3);
}

TEST(Cli, EmptyBenchWritesHeaderOnly) {
  put(work_dir() / "bench.json", "{\"criteria\": []}");
  fs::path out = work_dir() / "bench";
  ASSERT_EQ(run("bench --seed 1 --config " + q(work_dir() / "bench.json") + " --out " + q(out)), 0);
  std::string tsv = slurp(out / "bench.tsv");
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 1);
  EXPECT_EQ(tsv.rfind("criterion\t", 0), 0u);
}

TEST(Cli, UnknownSubcommand) { EXPECT_NE(run("frobnicate"), 0); }
