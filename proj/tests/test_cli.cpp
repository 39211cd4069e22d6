#include <gtest/gtest.h>

#include <algorithm>

#include "cli_runner.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using cli::quote;

namespace {


// Builds a corpus and a small model once for the whole suite.
class CliSuite : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixture::TempDir("cli");
    const auto d = dir_->path();
    ASSERT_EQ(cli::run("make-corpus --seed 4 --draws 3000 --out " + quote(d / "leak.txt")), 0);
    ASSERT_EQ(cli::run("make-corpus --seed 8 --draws 1500 --out " + quote(d / "target.txt")), 0);
    ASSERT_EQ(cli::run("train --seed 2 --corpus " + quote(d / "leak.txt") +
                       " --epochs 2 --batch 64 --hidden 32 --blocks 1 --latent-dim 8 --out " +
                       quote(d / "m.ckpt")),
              0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path path(const std::string& name) { return dir_->path() / name; }
  static std::string model() { return " --model " + quote(path("m.ckpt")); }

  static fixture::TempDir* dir_;
};

fixture::TempDir* CliSuite::dir_ = nullptr;

}  // namespace

TEST_F(CliSuite, TrainWritesCheckpointLossAndManifest) {
  EXPECT_TRUE(fs::exists(path("m.ckpt")));
  EXPECT_TRUE(fs::exists(path("m.ckpt.manifest.json")));
  const std::string loss = cli::slurp(path("m.ckpt.loss.csv"));
  EXPECT_EQ(loss.rfind("epoch,reconstruction,mmd,total\n", 0), 0u);
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 3);
}

TEST_F(CliSuite, ExitCodes) {
  EXPECT_EQ(cli::run("no-such-command"), 2);
  EXPECT_EQ(cli::run("cpg --template 'ab*'"), 2);
  EXPECT_EQ(cli::run("sample --model " + quote(path("absent.ckpt"))), 3);
  EXPECT_EQ(cli::run("sample" + model() + " --pivot abc --sigma -1 --out " + quote(path("s.txt"))), 4);
  EXPECT_EQ(cli::run("dpg" + model() + " --target " + quote(path("target.txt")) + " --alpha 1.5x"), 4);

  std::ofstream(path("junk.ckpt")) << "not a checkpoint";
  EXPECT_EQ(cli::run("sample --model " + quote(path("junk.ckpt"))), 5);
  std::ofstream(path("empty.txt")) << "";
  EXPECT_EQ(cli::run("dpg" + model() + " --target " + quote(path("empty.txt"))), 5);
  std::ofstream(path("bad.json")) << "{ nope";
  EXPECT_EQ(cli::run("sample --config " + quote(path("bad.json")) + model()), 4);
}

TEST_F(CliSuite, SampleAndCpgWriteGuesses) {
  ASSERT_EQ(cli::run("sample" + model() + " --n 50 --out " + quote(path("s.txt"))), 0);
  const std::string s = cli::slurp(path("s.txt"));
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 50);

  ASSERT_EQ(cli::run("cpg" + model() + " --template 'a*' --n 5 --max-attempts 20000 --out " +
                     quote(path("c.txt"))),
            0);
  std::ifstream in(path("c.txt"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    EXPECT_EQ(line.size(), 2u);
    EXPECT_EQ(line[0], 'a');
  }
  EXPECT_LE(lines, 5u);
}

TEST_F(CliSuite, RerunsAreByteIdentical) {
  const std::string target = " --target " + quote(path("target.txt"));
  for (const char* run : {"r1", "r2"}) {
    const std::string out = " --out-dir " + quote(path(run));
    ASSERT_EQ(cli::run("dpg --seed 7" + model() + target + " --budget 3000 --stride 500 --alpha 3" + out), 0);
    ASSERT_EQ(cli::run("static --seed 7" + model() + target + " --budget 3000 --stride 500 --out static.csv" + out), 0);
    ASSERT_EQ(cli::run("sweep --seed 7" + model() + target +
                       " --budget 1000 --seeds 2 --alphas 2 --sigmas 0.2,0.5" + out),
              0);
    ASSERT_EQ(cli::run("export-latent" + model() + " --corpus " + quote(path("target.txt")) +
                       " --limit 40" + out),
              0);
  }
  for (const char* f : {"trace.csv", "static.csv", "sweep.csv", "latent.csv"}) {
    const std::string a = cli::slurp(path("r1") / f);
    ASSERT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, cli::slurp(path("r2") / f)) << f;
  }
}

TEST_F(CliSuite, TrainingRerunIsByteIdentical) {
  const std::string base = "train --seed 2 --corpus " + quote(path("leak.txt")) +
                           " --epochs 2 --batch 64 --hidden 32 --blocks 1 --latent-dim 8 --out ";
  ASSERT_EQ(cli::run(base + quote(path("m2.ckpt"))), 0);
  EXPECT_EQ(cli::slurp(path("m.ckpt")), cli::slurp(path("m2.ckpt")));
  EXPECT_EQ(cli::slurp(path("m.ckpt.loss.csv")), cli::slurp(path("m2.ckpt.loss.csv")));
}

TEST_F(CliSuite, ConfigFileSuppliesDefaultsAndFlagsWin) {
  std::ofstream(path("cfg.json")) << R"({"n": 12, "sigma": 0.3, "seed": 11})";
  ASSERT_EQ(cli::run("sample --config " + quote(path("cfg.json")) + model() + " --out " +
                     quote(path("cfg1.txt"))),
            0);
  std::string s = cli::slurp(path("cfg1.txt"));
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 12);
  ASSERT_EQ(cli::run("sample --config " + quote(path("cfg.json")) + model() + " --n 4 --out " +
                     quote(path("cfg2.txt"))),
            0);
  s = cli::slurp(path("cfg2.txt"));
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 4);
}

TEST_F(CliSuite, OutputDirEnvironmentOverride) {
  const fs::path env_dir = path("envout");
  const std::string cmd = "LATENTPASS_OUTPUT_DIR=" + quote(env_dir) + " \"" LATENTPASS_CLI_PATH
                          "\" sample" + model() + " --n 3 >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(env_dir / "samples.txt"));
}

TEST_F(CliSuite, TestsetsAndEvaluation) {
  ASSERT_EQ(cli::run("build-testsets --seed 3 --corpus " + quote(path("leak.txt")) +
                     " --per-class 3 --max-draws 20000 --out " + quote(path("ts"))),
            0);
  EXPECT_TRUE(fs::exists(path("ts") / "index.csv"));
  ASSERT_EQ(cli::run("eval-cpg --seed 3" + model() + " --testsets " + quote(path("ts")) +
                     " --budget 500 --out " + quote(path("ev.csv"))),
            0);
  EXPECT_FALSE(cli::slurp(path("ev.csv")).empty());
}
