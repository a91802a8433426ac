// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "recam/error.hpp"
#include "recam/runconfig.hpp"
#include "test_util.hpp"

namespace recam {
namespace {

RunConfig base() {
    return RunConfig({{"seed", "0"}, {"scenes_held_out", "5"}, {"lr", "0.001"}, {"offsets", "1,2"}, {"overwrite", "false"}});
}

void expect_config_error(const std::function<void()>& fn) {
    try {
        fn();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config) << e.what();
    }
}

TEST(RunConfig, NormalizeKey) { EXPECT_EQ(RunConfig::normalize_key("scenes-held-out"), "scenes_held_out"); }

TEST(RunConfig, TextLayerWithComments) {
    RunConfig rc = base();
    rc.load_text("# comment\nseed = 7\n\n  lr=0.01   # trailing\nscenes-held-out = 9\n", "file");
    EXPECT_EQ(rc.get_u64("seed"), 7u);
    EXPECT_DOUBLE_EQ(rc.get_double("lr"), 0.01);
    EXPECT_EQ(rc.get_int("scenes_held_out"), 9);
    EXPECT_EQ(rc.origin("seed"), "file:2");
    EXPECT_EQ(rc.origin("offsets"), "default");
}

TEST(RunConfig, UnknownKeysAndMalformedLinesRejected) {
    RunConfig rc = base();
    expect_config_error([&] { rc.load_text("nope = 1\n"); });
    expect_config_error([&] { rc.load_text("seed 7\n"); });
    expect_config_error([&] { rc.set("bogus", "1"); });
    expect_config_error([&] { rc.get("bogus"); });
}

TEST(RunConfig, TypedGettersValidate) {
    RunConfig rc = base();
    rc.set("seed", "12x");
    expect_config_error([&] { rc.get_u64("seed"); });
    rc.set("lr", "fast");
    expect_config_error([&] { rc.get_double("lr"); });
    rc.set("offsets", "-1, 2.5,3");
    EXPECT_EQ(rc.get_doubles("offsets"), (std::vector<double>{-1.0, 2.5, 3.0}));
    rc.set("overwrite", "true");
    EXPECT_TRUE(rc.get_bool("overwrite"));
    rc.set("overwrite", "maybe");
    expect_config_error([&] { rc.get_bool("overwrite"); });
}

TEST(RunConfig, PrecedenceFileEnvFlag) {
    test::TempDir dir("runconfig");
    {
        std::ofstream os(dir / "run.cfg");
        os << "seed = 3\nlr = 0.5\nscenes_held_out = 2\n";
    }
    RunConfig rc = base();
    rc.load_file(dir / "run.cfg");
    ::setenv("RECAM_LR", "0.25", 1);
    ::setenv("RECAM_SCENES_HELD_OUT", "4", 1);
    rc.load_env();
    ::unsetenv("RECAM_LR");
    ::unsetenv("RECAM_SCENES_HELD_OUT");
    rc.set("scenes_held_out", "6");
    EXPECT_EQ(rc.get_int("seed"), 3);
    EXPECT_DOUBLE_EQ(rc.get_double("lr"), 0.25);
    EXPECT_EQ(rc.get_int("scenes_held_out"), 6);
    EXPECT_EQ(rc.origin("lr"), "env RECAM_LR");
    expect_config_error([&] { rc.load_file(dir / "missing.cfg"); });
}

TEST(RunConfig, DumpIsSortedAndReloadable) {
    RunConfig rc = base();
    rc.set("seed", "11");
    const std::string dump = rc.dump();
    EXPECT_EQ(dump.substr(0, 8), "lr = 0.0");
    RunConfig again = base();
    again.load_text(dump);
    EXPECT_EQ(again.dump(), dump);
}

}  // namespace
}  // namespace recam
