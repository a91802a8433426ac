// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <set>

#include "recam/container.hpp"
#include "recam/curation.hpp"
#include "recam/error.hpp"
#include "recam/rng.hpp"
#include "test_util.hpp"

namespace recam {
namespace {

struct Fixture {
    SceneParams params;
    GaussianScene scene;
    Trajectory recorded;
    Intrinsics k = Intrinsics::centered(48, 32);

    explicit Fixture(std::uint64_t seed = 5) {
        params.splat_count = 600;
        scene = generate_scene(seed, params);
        recorded = generate_trajectory(seed, params);
    }
};

void expect_kind(const std::function<void()>& fn, ErrorKind kind) {
    try {
        fn();
        FAIL() << "expected " << to_string(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

TEST(TrainingTriple, RelPosesAreRightAxisTranslations) {
    const Fixture fx;
    const TrainingTriple t = build_training_triple(fx.scene, fx.recorded, fx.k, 3.0, 2, 1);
    ASSERT_EQ(t.rel_poses.size(), fx.recorded.size());
    for (const Pose& d : t.rel_poses) {
        // source camera sits +3 m along the target's right axis
        EXPECT_LE((d.rotation - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_NEAR(d.translation.x(), 3.0, 1e-5);
        EXPECT_NEAR(d.translation.y(), 0.0, 1e-5);
        EXPECT_NEAR(d.translation.z(), 0.0, 1e-5);
    }
    EXPECT_EQ(t.condition_level, 2);
    EXPECT_DOUBLE_EQ(t.offset, 3.0);
}

TEST(TrainingTriple, ClipsAndLevels) {
    const Fixture fx;
    const TrainingTriple t = build_training_triple(fx.scene, fx.recorded, fx.k, -2.0, 1, 1);
    EXPECT_TRUE(t.source.same_shape(t.target));
    EXPECT_TRUE(t.condition.same_shape(t.target));
    const VideoClip clean = render_clip(fx.scene, quantize_to_float(fx.recorded), fx.k);
    EXPECT_TRUE(t.target == clean);
    EXPECT_FALSE(t.condition == clean);
    EXPECT_TRUE(t.source == render_clip(fx.scene, t.source_traj, fx.k));
}

TEST(TrainingTriple, ZeroOffsetOnlyInDebugMode) {
    const Fixture fx;
    expect_kind([&] { build_training_triple(fx.scene, fx.recorded, fx.k, 0.0, 1, 1); }, ErrorKind::Curation);
    CurationOptions debug;
    debug.allow_zero_offset = true;
    const TrainingTriple t = build_training_triple(fx.scene, fx.recorded, fx.k, 0.0, 1, 1, debug);
    for (const Pose& d : t.rel_poses) EXPECT_LE(max_abs_diff(d, Pose::identity()), 1e-12);
    EXPECT_TRUE(t.source == t.target);
}

TEST(TrainingTriple, RejectsLevelZeroAndUnsupportedOffsets) {
    const Fixture fx;
    expect_kind([&] { build_training_triple(fx.scene, fx.recorded, fx.k, 3.0, 0, 1); }, ErrorKind::Curation);
    expect_kind([&] { build_training_triple(fx.scene, fx.recorded, fx.k, 2.5, 1, 1); }, ErrorKind::Curation);
    expect_kind([&] { build_training_triple(fx.scene, fx.recorded, fx.k, 5.0, 1, 1); }, ErrorKind::Curation);
}

TEST(TrainingTriple, OutOfBoundsShiftIsCurationError) {
    Fixture fx;
    CurationOptions wide;
    wide.allowed_offsets = {9.0};
    expect_kind([&] { build_training_triple(fx.scene, fx.recorded, fx.k, 9.0, 1, 1, wide); }, ErrorKind::Curation);
}

TEST(InferencePair, RolesFlipRelativeToTraining) {
    const Fixture fx;
    for (double delta : {-4.0, -1.0, 3.0}) {
        const TrainingTriple t = build_training_triple(fx.scene, fx.recorded, fx.k, delta, 1, 7);
        const InferencePair p = build_inference_pair(fx.scene, fx.recorded, fx.k, delta, 7);
        for (std::size_t i = 0; i < t.rel_poses.size(); ++i) {
            EXPECT_EQ(max_abs_diff(t.source_traj.poses[i], p.target_traj.poses[i]), 0.0);
            EXPECT_EQ(max_abs_diff(t.target_traj.poses[i], p.source_traj.poses[i]), 0.0);
            EXPECT_LE(max_abs_diff(p.rel_poses[i], se3_inverse(t.rel_poses[i])), 1e-9);
        }
        EXPECT_TRUE(p.source == t.target);
        // the inference condition is a mildly degraded version of the training source
        EXPECT_FALSE(p.condition == t.source);
        const GaussianScene mild = degrade_scene(fx.scene, fidelity_level(1), derive_seed(7, {0x1f}));
        EXPECT_TRUE(p.condition == render_clip(mild, t.source_traj, fx.k));
    }
}

TEST(Dataset, ProductCountAndDeterminism) {
    test::TempDir dir("dataset");
    DatasetConfig config;
    config.seed = 3;
    config.scenes = 4;
    config.scene.splat_count = 300;
    const DatasetManifest m = build_dataset(config, dir / "a.pdt");
    EXPECT_EQ(m.descriptors.size(), 96u);
    for (const auto& [delta, n] : m.counts_per_offset) EXPECT_EQ(n, 12u) << delta;
    config.overwrite = true;
    build_dataset(config, dir / "b.pdt");
    EXPECT_EQ(read_file_bytes(dir / "a.pdt"), read_file_bytes(dir / "b.pdt"));
}

TEST(Dataset, RefusesToOverwrite) {
    test::TempDir dir("dataset");
    DatasetConfig config;
    config.scenes = 1;
    config.offsets = {1.0};
    config.levels = {1};
    config.scene.splat_count = 100;
    build_dataset(config, dir / "a.pdt");
    expect_kind([&] { build_dataset(config, dir / "a.pdt"); }, ErrorKind::Io);
}

TEST(Dataset, ReadBackMatchesAndPosesRegenerate) {
    test::TempDir dir("dataset");
    DatasetConfig config;
    config.seed = 11;
    config.scenes = 2;
    config.offsets = {-2.0, 3.0};
    config.levels = {1, 3};
    config.scene.splat_count = 300;
    const DatasetManifest m = build_dataset(config, dir / "d.pdt");
    const Dataset d = read_dataset(dir / "d.pdt");
    ASSERT_EQ(d.triples.size(), 8u);
    EXPECT_EQ(d.manifest.descriptors, m.descriptors);
    EXPECT_EQ(d.manifest.config_hash, config.hash());
    const auto contents = read_container(dir / "d.pdt");
    for (std::size_t i = 0; i < d.triples.size(); ++i) {
        const TrainingTriple& t = d.triples[i];
        const auto& desc = m.descriptors[i];
        EXPECT_EQ(desc.offset_bytes, contents.offsets[i * kTensorsPerTriple]);
        EXPECT_EQ(t.scene_seed, desc.scene_seed);
        EXPECT_LT(t.scene_seed, kHeldOutSeedBase);
        const auto regenerated = relative_poses(t.source_traj, t.target_traj);
        for (std::size_t f = 0; f < regenerated.size(); ++f) {
            EXPECT_LE(max_abs_diff(regenerated[f], t.rel_poses[f]), 1e-6);
        }
        // rebuild one triple from scratch and compare bit-for-bit
        if (i == 5) {
            const GaussianScene scene = generate_scene(t.scene_seed, config.scene);
            const Trajectory rec = generate_trajectory(t.scene_seed, config.scene);
            EXPECT_TRUE(render_clip(scene, quantize_to_float(rec), config.intrinsics) == t.target);
        }
    }
}

TEST(Dataset, ManifestTextRoundTrip) {
    DatasetManifest m;
    m.config_hash = 0x1234;
    m.mode = CurationMode::Longitudinal;
    m.descriptors.push_back({0, 17, 2.0, 1, 12, 8, 32, 48});
    m.descriptors.push_back({1, 17, -3.0, 3, 900, 8, 32, 48});
    m.counts_per_offset = {{-3.0, 1}, {2.0, 1}};
    const std::string text = m.to_text();
    EXPECT_NE(text.find("0,17,2,1,12,8,32,48"), std::string::npos);
    const DatasetManifest back = DatasetManifest::parse(text);
    EXPECT_EQ(back.descriptors, m.descriptors);
    EXPECT_EQ(back.config_hash, m.config_hash);
    EXPECT_EQ(back.mode, m.mode);
    EXPECT_EQ(back.counts_per_offset, m.counts_per_offset);
}

TEST(Dataset, LongitudinalModeSplitsOneDrive) {
    test::TempDir dir("dataset");
    DatasetConfig config;
    config.seed = 2;
    config.scenes = 1;
    config.mode = CurationMode::Longitudinal;
    config.levels = {2};
    config.scene.splat_count = 300;
    build_dataset(config, dir / "l.pdt");
    const Dataset d = read_dataset(dir / "l.pdt");
    ASSERT_EQ(d.triples.size(), 8u);
    for (const auto& t : d.triples) {
        EXPECT_GT(t.offset, 0.0);
        for (const Pose& rel : t.rel_poses) {
            // source sits behind the target along the drive: pure forward/backward motion
            EXPECT_NEAR(rel.translation.x(), 0.0, 1e-5);
            EXPECT_LT(rel.translation.z(), 0.0);
        }
    }
    EXPECT_EQ(d.manifest.mode, CurationMode::Longitudinal);
}

TEST(Dataset, TrainingSeedsAreDistinctAndBelowHeldOutBase) {
    const auto seeds = training_scene_seeds(9, 500);
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    EXPECT_EQ(unique.size(), seeds.size());
    for (auto s : seeds) EXPECT_LT(s, kHeldOutSeedBase);
}

}  // namespace
}  // namespace recam
