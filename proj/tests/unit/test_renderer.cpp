// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "recam/error.hpp"
#include "recam/renderer.hpp"

namespace recam {
namespace {

GaussianScene single_splat(const Vec3& center, double scale, const Vec3& color = Vec3(1, 1, 1)) {
    GaussianScene scene;
    scene.background = Vec3::Zero();
    Splat s;
    s.center = center;
    s.scale = Vec3::Constant(scale);
    s.color = color;
    s.opacity = 1.0;
    scene.splats.push_back(s);
    scene.bounds = {Vec3::Constant(-100), Vec3::Constant(100)};
    return scene;
}

Trajectory still(const Pose& p) {
    Trajectory t;
    t.poses.push_back(p);
    return t;
}

/// Intensity-weighted centroid of the red channel in frame 0.
std::pair<double, double> centroid(const VideoClip& clip) {
    double sx = 0, sy = 0, w = 0;
    for (int y = 0; y < clip.height(); ++y) {
        for (int x = 0; x < clip.width(); ++x) {
            const double v = clip.at(0, 0, y, x);
            sx += v * x;
            sy += v * y;
            w += v;
        }
    }
    return {sx / w, sy / w};
}

std::pair<int, int> brightest(const VideoClip& clip) {
    int bx = 0, by = 0;
    float best = -1.0f;
    for (int y = 0; y < clip.height(); ++y) {
        for (int x = 0; x < clip.width(); ++x) {
            if (clip.at(0, 0, y, x) > best) {
                best = clip.at(0, 0, y, x);
                bx = x;
                by = y;
            }
        }
    }
    return {bx, by};
}

TEST(RenderClip, TransparentSceneShowsBackground) {
    GaussianScene scene = generate_scene(3, SceneParams{});
    for (auto& s : scene.splats) s.opacity = 0.0;
    const VideoClip clip = render_clip(scene, generate_trajectory(3, SceneParams{}), Intrinsics{});
    for (int f = 0; f < clip.frames(); ++f) {
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < clip.height(); ++y) {
                for (int x = 0; x < clip.width(); ++x) {
                    EXPECT_EQ(clip.at(f, c, y, x), static_cast<float>(scene.background[c]));
                }
            }
        }
    }
}

TEST(RenderClip, SingleSplatLandsOnItsProjection) {
    Intrinsics k = Intrinsics::centered(96, 64);
    const Vec3 point(0.7, -0.4, 6.0);
    const VideoClip clip = render_clip(single_splat(point, 0.01), still(Pose::identity()), k);
    const Projection p = project(point, Pose::identity(), k);
    const auto [bx, by] = brightest(clip);
    EXPECT_LE(std::abs(bx - p.u), 0.5 + 1e-9);
    EXPECT_LE(std::abs(by - p.v), 0.5 + 1e-9);
    const auto [cx, cy] = centroid(clip);
    EXPECT_NEAR(cx, p.u, 0.25);
    EXPECT_NEAR(cy, p.v, 0.25);
}

TEST(RenderClip, ParallaxRatioForDistantSplat) {
    Intrinsics k = Intrinsics::centered(256, 64);
    k.fx = k.fy = 40.0;
    const Vec3 point(0.0, 0.0, 20.0);
    const GaussianScene scene = single_splat(point, 0.05);
    const double u0 = centroid(render_clip(scene, still(Pose::identity()), k)).first;
    const double u1 = centroid(render_clip(scene, still(Pose::from_translation({1.5, 0, 0})), k)).first;
    const double u2 = centroid(render_clip(scene, still(Pose::from_translation({3.0, 0, 0})), k)).first;
    EXPECT_NEAR(u2 - u0, 2.0 * (u1 - u0), 1.0);
    EXPECT_NEAR(u1 - u0, -k.fx * 1.5 / 20.0, 0.5);
}

TEST(RenderClip, NearSplatOccludesFarSplat) {
    GaussianScene scene = single_splat({0, 0, 10}, 0.5, Vec3(0, 0, 1));
    Splat near;
    near.center = Vec3(0, 0, 4);
    near.scale = Vec3::Constant(0.5);
    near.color = Vec3(1, 0, 0);
    near.opacity = 1.0;
    scene.splats.push_back(near);
    const Intrinsics k;
    const VideoClip clip = render_clip(scene, still(Pose::identity()), k);
    const int cx = static_cast<int>(std::lround(k.cx)), cy = static_cast<int>(std::lround(k.cy));
    EXPECT_GT(clip.at(0, 0, cy, cx), 0.95f);
    EXPECT_LT(clip.at(0, 2, cy, cx), 0.05f);
}

TEST(RenderClip, DeterministicAndInRange) {
    const SceneParams params;
    const GaussianScene scene = generate_scene(12, params);
    const Trajectory traj = generate_trajectory(12, params);
    const VideoClip a = render_clip(scene, traj, Intrinsics{});
    const VideoClip b = render_clip(scene, traj, Intrinsics{});
    EXPECT_TRUE(a == b);
    EXPECT_NO_THROW(validate_clip(a));
    RenderOptions threaded;
    threaded.threads = 3;
    EXPECT_TRUE(render_clip(scene, traj, Intrinsics{}, threaded) == a);
}

TEST(DegradeScene, LevelZeroIsIdentity) {
    const GaussianScene scene = generate_scene(1, SceneParams{});
    const GaussianScene same = degrade_scene(scene, fidelity_level(0), 99);
    ASSERT_EQ(same.splats.size(), scene.splats.size());
    for (std::size_t i = 0; i < scene.splats.size(); ++i) {
        EXPECT_EQ(same.splats[i].center, scene.splats[i].center);
        EXPECT_EQ(same.splats[i].color, scene.splats[i].color);
        EXPECT_EQ(same.splats[i].scale, scene.splats[i].scale);
    }
}

TEST(DegradeScene, KeepFractionCount) {
    const GaussianScene scene = generate_scene(1, SceneParams{});
    ASSERT_EQ(scene.splats.size(), 2000u);
    FidelityLevel half = fidelity_level(1);
    half.keep_fraction = 0.5;
    EXPECT_EQ(degrade_scene(scene, half, 5).splats.size(), 1000u);
    EXPECT_EQ(degrade_scene(scene, fidelity_level(3), 5).splats.size(), 300u);
}

TEST(DegradeScene, SharpnessDecreasesWithLevel) {
    const SceneParams params;
    for (std::uint64_t seed : {2u, 9u, 31u}) {
        const GaussianScene scene = generate_scene(seed, params);
        const Trajectory traj = generate_trajectory(seed, params);
        double previous = std::numeric_limits<double>::infinity();
        for (int level = 0; level <= 3; ++level) {
            const double energy = gradient_energy(render_clip(degrade_scene(scene, fidelity_level(level), seed), traj,
                                                              Intrinsics::centered(48, 32)));
            EXPECT_LT(energy, previous) << "seed " << seed << " level " << level;
            previous = energy;
        }
    }
}

TEST(FidelityLevel, LadderValuesAndRange) {
    EXPECT_DOUBLE_EQ(fidelity_level(2).keep_fraction, 0.35);
    EXPECT_DOUBLE_EQ(fidelity_level(3).scale_inflation, 3.0);
    EXPECT_THROW(fidelity_level(4), Error);
    EXPECT_THROW(fidelity_level(-1), Error);
}

}  // namespace
}  // namespace recam
