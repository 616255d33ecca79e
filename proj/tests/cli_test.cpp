#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "padkit/imgproc.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kCli = PADKIT_CLI;
const fs::path kData = PADKIT_DATA;

int cli(const std::string& args) {
  const std::string cmd = kCli.string() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("padkit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& rel) const { return (dir_ / rel).string(); }

  // synthetic domain, split, ready for training
  std::string split_domain(const std::string& domain, int seed) {
    EXPECT_EQ(cli("synth --domain " + domain + " --subjects 6 --frames 2 --out " + at(domain + "_raw")), 0);
    EXPECT_EQ(cli("split --seed " + std::to_string(seed) + " --records " + at(domain + "_raw/records.txt") +
                     " --out " + at(domain + "_split")),
              0);
    return at(domain + "_split/manifest.txt");
  }
  fs::path dir_;
};

const char* kTiny = "--lr 1e-3 --input-size 16 --epochs 2";

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli(""), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("report --out " + at("r") + " --no-such-flag"), 1);
  EXPECT_EQ(cli("--help"), 0);
}

TEST_F(Cli, ReportReproducesGoldenFiles) {
  const std::string ex = (kData / "examples").string();
  const std::string sets = " --scores " + ex + "/separable.csv --scores " + ex + "/overlap.csv --scores " + ex +
                           "/ties.csv --scores " + ex + "/bonafide_only.csv --dev overlap=" + ex +
                           "/overlap_dev.csv --dev ties=" + ex + "/ties_dev.csv";
  for (const std::string rule : {"min-acer", "eer"}) {
    const std::string sub = rule == "eer" ? "eer" : "min_acer";
    ASSERT_EQ(cli("report --out " + at(sub) + " --threshold-rule " + rule + sets), 0);
    for (const auto& e : fs::directory_iterator(kData / "golden" / sub)) {
      if (e.path().filename() == "improvement.csv") continue;
      EXPECT_EQ(slurp(e.path()), slurp(dir_ / sub / e.path().filename())) << sub << "/" << e.path().filename();
    }
  }
  ASSERT_EQ(cli("report --out " + at("imp") + " --baseline " + ex + "/baseline.csv --combined " + ex +
                   "/combined.csv"),
            0);
  EXPECT_EQ(slurp(kData / "golden/min_acer/improvement.csv"), slurp(dir_ / "imp/improvement.csv"));
}

TEST_F(Cli, BadScoreFileIsADataError) {
  std::ofstream(dir_ / "bad.csv") << "id,label,score\na,bonafide,0.5\nb,attack,oops\n";
  EXPECT_EQ(cli("report --out " + at("r") + " --scores " + at("bad.csv")), 2);
  EXPECT_EQ(cli("report --out " + at("r") + " --scores " + at("missing.csv")), 2);
}

TEST_F(Cli, PreprocessEmptyDirectoryFails) {
  fs::create_directories(dir_ / "empty");
  EXPECT_NE(cli("preprocess --input " + at("empty") + " --out " + at("q")), 0);
  EXPECT_EQ(slurp(dir_ / "q/quality.csv"), padkit::img::quality_csv_header() + "\n");
}

TEST_F(Cli, PreprocessZeroThresholdKeepsEverything) {
  ASSERT_EQ(cli("synth --domain synthA --subjects 2 --frames 2 --side 32 --materialize --out " + at("s")), 0);
  const std::string input = at("s/images/synthA");
  ASSERT_EQ(cli("preprocess --input " + input + " --quality-threshold 0 --out " + at("q0")), 0);
  const auto records = slurp(dir_ / "q0/records.txt");
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 4 + 1 + 8);  // header lines + 8 images
  // unreadable files are listed and signalled, the rest still processed
  std::ofstream(dir_ / "s/images/synthA/attack/junk.bmp") << "not an image";
  EXPECT_EQ(cli("preprocess --input " + input + " --quality-threshold 0 --out " + at("q1")), 2);
  EXPECT_NE(slurp(dir_ / "q1/unreadable.csv").find("attack/junk.bmp"), std::string::npos);
  EXPECT_EQ(slurp(dir_ / "q1/quality.csv"), slurp(dir_ / "q0/quality.csv"));
}

TEST_F(Cli, PreprocessIsRepeatable) {
  ASSERT_EQ(cli("synth --domain synthB --subjects 2 --frames 2 --side 32 --materialize --out " + at("s")), 0);
  ASSERT_EQ(cli("preprocess --input " + at("s/images/synthB") + " --out " + at("p1")), 0);
  ASSERT_EQ(cli("preprocess --input " + at("s/images/synthB") + " --out " + at("p2")), 0);
  EXPECT_EQ(slurp(dir_ / "p1/quality.csv"), slurp(dir_ / "p2/quality.csv"));
}

TEST_F(Cli, DryRunWritesNothing) {
  const auto m = split_domain("synthA", 1);
  EXPECT_EQ(cli("train --dry-run --manifest " + m + " --out " + at("never") + " " + kTiny), 0);
  EXPECT_FALSE(fs::exists(dir_ / "never"));
  EXPECT_EQ(cli("train --dry-run --manifest " + m + " --lr -1"), 1);
  EXPECT_EQ(cli("train --dry-run --manifest " + m + " --model resnet"), 1);
}

TEST_F(Cli, ConfigFileLayersUnderFlags) {
  const auto m = split_domain("synthA", 1);
  std::ofstream(dir_ / "cfg.txt") << "# tiny\nlearning_rate 0.01\ninput_size 16\nmax_epochs 1\nmodel attacknet-v1\n";
  EXPECT_EQ(cli("train --manifest " + m + " --config " + at("cfg.txt") + " --model livenessnet --out " + at("t")), 0);
  const auto cfg = slurp(dir_ / "t/config.txt");
  EXPECT_NE(cfg.find("model livenessnet\n"), std::string::npos);
  EXPECT_NE(cfg.find("learning_rate 0.01\n"), std::string::npos);
  EXPECT_NE(cfg.find("max_epochs 1\n"), std::string::npos);
  std::ofstream(dir_ / "bad.txt") << "learning_rate\n";
  EXPECT_EQ(cli("train --dry-run --manifest " + m + " --config " + at("bad.txt")), 1);
}

TEST_F(Cli, LeakedVideoExitsThree) {
  const auto m = split_domain("synthA", 1);
  auto text = slurp(m);
  const auto pos = text.find(",test,");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 6, ",train,");
  std::ofstream(dir_ / "leaky.txt") << text;
  EXPECT_EQ(cli("train --dry-run --manifest " + at("leaky.txt")), 3);
  EXPECT_EQ(cli("run --manifest " + at("leaky.txt") + " --out " + at("r") + " " + kTiny), 3);
}

TEST_F(Cli, CrossOnTheSourceMatchesEvalAndVerifies) {
  const auto a = split_domain("synthA", 1);
  const auto b = split_domain("synthB", 2);
  ASSERT_EQ(cli("train --manifest " + a + " --out " + at("run") + " " + kTiny), 0);
  ASSERT_EQ(cli("eval --run " + at("run") + " --manifest synthA=" + a + " --out " + at("ev")), 0);
  ASSERT_EQ(cli("crosseval --run " + at("run") + " --target synthA=" + a + " --target synthB=" + b + " --out " +
                   at("cx")),
            0);
  EXPECT_EQ(slurp(dir_ / "ev/scores.csv"), slurp(dir_ / "cx/scores_synthA.csv"));
  const auto ev = slurp(dir_ / "ev/report.csv");
  EXPECT_NE(slurp(dir_ / "cx/cross.csv").find(ev.substr(ev.find('\n') + 1)), std::string::npos);

  // evaluating on data the model was trained on is refused
  std::ofstream(dir_ / "self.txt") << [&] {
    auto t = slurp(a);
    for (auto p = t.find(",train,"); p != std::string::npos; p = t.find(",train,")) t.replace(p, 7, ",test,");
    return t;
  }();
  EXPECT_EQ(cli("eval --run " + at("run") + " --manifest x=" + at("self.txt") + " --out " + at("leak")), 3);

  EXPECT_EQ(cli("verify --run " + at("run") + " --out " + at("again")), 0);
  std::ofstream(dir_ / "run/policy.txt", std::ios::app) << "# edited\n";
  EXPECT_EQ(cli("verify --run " + at("run") + " --out " + at("again2")), 2);
  EXPECT_EQ(cli("eval --run " + at("run") + " --manifest synthA=" + a + " --out " + at("ev2")), 2);
}

TEST_F(Cli, StatsOverEvaluationTables) {
  std::ofstream(dir_ / "a.csv") << "model,accuracy\nx,0.9\nx,0.8\nx,NA\nx,0.85\n";
  std::ofstream(dir_ / "b.csv") << "model,accuracy\ny,0.7\ny,0.75\n";
  ASSERT_EQ(cli("stats --group a=" + at("a.csv") + " --group b=" + at("b.csv") + " --out " + at("st")), 0);
  const auto s = slurp(dir_ / "st/stats.csv");
  EXPECT_NE(s.find("welch,a,b,"), std::string::npos);
  EXPECT_EQ(cli("stats --group a=" + at("a.csv") + " --column recall --out " + at("st2")), 2);
}

TEST_F(Cli, ModelsTable) {
  ASSERT_EQ(cli("models --out " + at("m")), 0);
  const auto csv = slurp(dir_ / "m/models.csv");
  EXPECT_NE(csv.find("livenessnet,256,8405778,320,8406098,8406098,0\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "m/reconstruction.md"));
}
