#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cuqgnn/eval/report_csv.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(UQGNN_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("uqgnn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        std::ofstream(dir / "cfg.txt") << "train.max_epochs = 40\ntrain.patience = 40\nsplit.repeats = 2\n";
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string p(const std::string& rel) const { return (dir / rel).string(); }

    fs::path dir;
};

}  // namespace

TEST_F(Cli, SynthIsDeterministic) {
    ASSERT_EQ(run("synth --generator ba --n 80 --seed 5 --out " + p("a")), 0);
    ASSERT_EQ(run("synth --generator ba --n 80 --seed 5 --out " + p("b")), 0);
    for (const char* f : {"features.csv", "edges.csv", "labels.csv"}) EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    const cuq::Graph g = cuq::load_dataset(dir / "a");
    EXPECT_EQ(g.n_nodes(), 80u);
}

TEST_F(Cli, TrainTwiceGivesIdenticalCheckpoints) {
    ASSERT_EQ(run("synth --generator sbm --n 120 --seed 1 --out " + p("data")), 0);
    for (const char* out : {"r1", "r2"})
        ASSERT_EQ(run("train --dataset " + p("data") + " --model cuq_ppr --config " + p("cfg.txt") + " --seed 7 --out " + p(out)), 0);
    for (const char* f : {"cuq_ppr.split0.ckpt", "cuq_ppr.split1.ckpt", "cuq_ppr.split0.history.csv"}) {
        const std::string a = slurp(dir / "r1" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, slurp(dir / "r2" / f)) << f;
    }
}

TEST_F(Cli, ArcWritesFullGrid) {
    ASSERT_EQ(run("synth --generator sbm --n 120 --seed 2 --out " + p("data")), 0);
    ASSERT_EQ(run("train --dataset " + p("data") + " --model gpn --config " + p("cfg.txt") + " --seed 3 --out " + p("ck")), 0);
    ASSERT_EQ(run("train --dataset " + p("data") + " --model appnp --config " + p("cfg.txt") + " --seed 3 --out " + p("ck")), 0);
    ASSERT_EQ(run("arc --dataset " + p("data") + " --checkpoints " + p("ck") + " --splits-seed 3 --out " + p("arc.csv")), 0);
    std::ifstream is(dir / "arc.csv");
    const cuq::ArcTable t = cuq::read_arc_csv(is);
    EXPECT_EQ(t.rows.size(), 100u);
    EXPECT_EQ(t.header.size(), 5u);
}

TEST_F(Cli, OodWritesValidReport) {
    ASSERT_EQ(run("synth --generator sbm --n 160 --seed 4 --out " + p("data")), 0);
    ASSERT_EQ(run("ood --mode noise --dataset " + p("data") + " --model cuq_ppr --model appnp --config " + p("cfg.txt") +
                  " --seed 1 --out " + p("ood.csv")),
              0);
    std::ifstream is(dir / "ood.csv");
    const auto rows = cuq::read_ood_csv(is);
    EXPECT_EQ(rows.size(), 6u);  // five measures for cuq_ppr, total uncertainty for appnp
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("synth --generator nope --out " + p("x")), 2);
    EXPECT_EQ(run("train --dataset " + p("missing") + " --model gpn --out " + p("x")), 2);
    ASSERT_EQ(run("synth --generator sbm --n 60 --seed 1 --out " + p("data")), 0);
    EXPECT_EQ(run("train --dataset " + p("data") + " --model nope --out " + p("x")), 2);
    std::ofstream(dir / "bad.txt") << "train.unknown_key = 1\n";
    EXPECT_EQ(run("train --dataset " + p("data") + " --model gpn --config " + p("bad.txt") + " --out " + p("x")), 2);
    EXPECT_EQ(run("ood --mode leave-out --leave-out 0,1,2 --dataset " + p("data") + " --model gpn --out " + p("x.csv")), 3);
    std::ofstream(dir / "data" / "features.csv", std::ios::app) << "1,oops\n";
    EXPECT_EQ(run("train --dataset " + p("data") + " --model gpn --out " + p("x")), 2);
}

TEST(CliVerify, QuickSuitePasses) { EXPECT_EQ(run(std::string("verify --quick")), 0); }
