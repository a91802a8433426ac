// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_util.hpp"

namespace recam {
namespace {

constexpr const char* kImage = " --width 24 --height 16";
constexpr const char* kNet = " --patch 4 --d-model 16 --heads 2 --depth 1 --time-dim 8 --ffn-mult 2 --cam-hidden 8";

int run(const std::string& args) {
    const std::string cmd = std::string(RECAM_BIN) + " -q " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

TEST(Cli, UsageErrorsExitOne) {
    EXPECT_EQ(run(""), 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("gen-data --no-such-flag 3"), 1);
    EXPECT_EQ(run("train --preset bogus --data x.pdt"), 1);
    test::TempDir dir("cli_cfg");
    {
        std::ofstream os(dir / "bad.cfg");
        os << "not_a_key = 1\n";
    }
    EXPECT_EQ(run("--config " + (dir / "bad.cfg").string() + " render-debug"), 1);
}

TEST(Cli, RuntimeErrorsExitTwo) {
    test::TempDir dir("cli_rt");
    EXPECT_EQ(run("eval --ckpt " + (dir / "missing.ckpt").string()), 2);
    EXPECT_EQ(run("train --data " + (dir / "missing.pdt").string() + " --out " + (dir / "m.ckpt").string()), 2);
}

TEST(Cli, PipelineIsReproducible) {
    test::TempDir dir("cli_pipe");
    const std::string d = dir.path().string();
    const std::string data = " --scenes 1 --offsets=-1,1 --levels 1 --splats 300 --seed 7";
    ASSERT_EQ(run("gen-data" + data + " --out " + d + "/a.pdt" + kImage), 0);
    ASSERT_EQ(run("gen-data" + data + " --out " + d + "/b.pdt" + kImage), 0);
    EXPECT_EQ(slurp(dir / "a.pdt"), slurp(dir / "b.pdt"));
    // existing outputs are never replaced silently
    EXPECT_EQ(run("gen-data" + data + " --out " + d + "/a.pdt" + kImage), 2);
    EXPECT_EQ(run("gen-data" + data + " --out " + d + "/a.pdt --overwrite" + kImage), 0);

    const std::string train = " --data " + d + "/a.pdt --steps 3 --batch 2 --seed 1 --threads 1" + std::string(kNet);
    ASSERT_EQ(run("train --stage 1" + train + " --out " + d + "/s1.ckpt"), 0);
    ASSERT_EQ(run("train --stage 1" + train + " --out " + d + "/s1b.ckpt"), 0);
    EXPECT_EQ(slurp(dir / "s1.ckpt"), slurp(dir / "s1b.ckpt"));
    const std::string loss = slurp(dir / "s1.loss.csv");
    EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 4);
    EXPECT_EQ(loss, slurp(dir / "s1b.loss.csv"));
    ASSERT_EQ(run("train --stage 2 --init " + d + "/s1.ckpt" + train + " --out " + d + "/s2.ckpt"), 0);
    EXPECT_EQ(run("train --stage 2" + train + " --out " + d + "/bad.ckpt"), 1);

    const std::string eval = " --ckpt " + d + "/s2.ckpt --scenes-held-out 1 --offsets=-1,2 --sample-steps 2 --seed 3";
    ASSERT_EQ(run("eval" + eval + " --report " + d + "/r1.csv --summary " + d + "/s1.csv"), 0);
    ASSERT_EQ(run("eval" + eval + " --report " + d + "/r2.csv"), 0);
    EXPECT_EQ(slurp(dir / "r1.csv"), slurp(dir / "r2.csv"));
    const std::string report = slurp(dir / "r1.csv");
    EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 3);

    ASSERT_EQ(run("sample --ckpt " + d + "/s2.ckpt --scene-seed 10001 --delta 2 --sample-steps 2 --out " + d + "/frames"), 0);
    EXPECT_TRUE(std::filesystem::exists(dir / "frames" / "sample_f00.ppm"));
    EXPECT_TRUE(std::filesystem::exists(dir / "frames" / "compare_f07.ppm"));
}

TEST(Cli, RenderDebugAndDumpSplats) {
    test::TempDir dir("cli_debug");
    ASSERT_EQ(run("render-debug --scene-seed 4 --delta 2 --level 1 --splats 200 --out " + (dir / "r").string() +
                  kImage),
              0);
    EXPECT_TRUE(std::filesystem::exists(dir / "r" / "frame_00.ppm"));
    ASSERT_EQ(run("dump-splats --scene-seed 4 --splats 200 --out " + (dir / "s.csv").string()), 0);
    const std::string csv = slurp(dir / "s.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 201);
}

}  // namespace
}  // namespace recam
