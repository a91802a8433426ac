// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <ostream>

#include "recam/error.hpp"
#include "recam/rng.hpp"

namespace recam {
namespace {

constexpr double kGroundFraction = 0.5;
constexpr double kWallFraction = 0.25;
constexpr double kCorridorStart = -5.0;
constexpr double kSideMargin = 1.0;

Vec3 clamp01(const Vec3& c) { return c.cwiseMax(0.0).cwiseMin(1.0); }

Vec3 hsv(double h, double s, double v) {
    h = std::fmod(h, 1.0) * 6.0;
    const int i = static_cast<int>(h) % 6;
    const double f = h - std::floor(h);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    switch (i) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

double corridor_end(const SceneParams& p) { return kCorridorStart + p.corridor_length; }

void add_ground(GaussianScene& scene, Rng& rng, const SceneParams& p, int count) {
    const double half = 0.5 * p.corridor_width;
    const double area = p.corridor_width * p.corridor_length;
    const double spacing = std::sqrt(area / std::max(count, 1));
    const double lanes[] = {-2.0, 2.0};
    for (int i = 0; i < count; ++i) {
        Splat s;
        const double x = rng.uniform(-half, half);
        const double z = rng.uniform(kCorridorStart, corridor_end(p));
        s.center = {x, p.camera_height, z};
        const double r = spacing * rng.uniform(0.45, 0.7);
        s.scale = {r, 0.02, r};
        const bool checker = (static_cast<int>(std::floor(x / 2.0)) + static_cast<int>(std::floor(z / 2.0))) % 2 == 0;
        double g = checker ? 0.28 : 0.42;
        Vec3 color = Vec3::Constant(g + rng.uniform(-0.04, 0.04));
        for (double lane : lanes) {
            if (std::abs(x - lane) < 0.35 && std::fmod(std::abs(z) + 100.0, 4.0) < 2.2) {
                color = Vec3(0.95, 0.92, 0.75);
            }
        }
        if (std::abs(x) > half - 1.5) color = Vec3(0.55, 0.5, 0.45);  // sidewalk
        s.color = clamp01(color);
        s.opacity = 0.95;
        scene.splats.push_back(s);
    }
}

void add_walls(GaussianScene& scene, Rng& rng, const SceneParams& p, int count) {
    const double half = 0.5 * p.corridor_width;
    const double area = 2.0 * p.wall_height * p.corridor_length;
    const double spacing = std::sqrt(area / std::max(count, 1));
    constexpr double kFacade = 6.0;  // meters per facade segment
    for (int i = 0; i < count; ++i) {
        Splat s;
        const double side = (i % 2 == 0) ? -1.0 : 1.0;
        const double z = rng.uniform(kCorridorStart, corridor_end(p));
        const double y = p.camera_height - rng.uniform(0.0, p.wall_height);
        s.center = {side * half, y, z};
        const double r = spacing * rng.uniform(0.45, 0.7);
        s.scale = {0.02, r, r};
        const int facade = static_cast<int>(std::floor((z - kCorridorStart) / kFacade));
        const double hue = std::fmod(0.13 * facade + (side > 0 ? 0.5 : 0.0) + 0.07 * (scene.seed % 7), 1.0);
        const bool window = std::fmod(z - kCorridorStart, 1.5) < 0.7 && std::fmod(p.camera_height - y, 2.0) > 1.0;
        Vec3 color = hsv(hue, 0.45, window ? 0.25 : 0.75);
        s.color = clamp01(color + Vec3::Constant(rng.uniform(-0.03, 0.03)));
        s.opacity = 0.95;
        scene.splats.push_back(s);
    }
}

void add_objects(GaussianScene& scene, Rng& rng, const SceneParams& p, int count) {
    if (count <= 0) return;
    const double half = 0.5 * p.corridor_width;
    const double road_edge = std::min(p.max_offset + 0.8, half - 1.2);
    const int clusters = std::max(1, static_cast<int>(std::lround(p.object_density * p.corridor_length)));
    const int per_cluster = std::max(1, count / clusters);
    const double traj_end = p.speed * p.trajectory_length;
    int placed = 0;
    for (int c = 0; c < clusters && placed < count; ++c) {
        const bool far = c % 4 == 3;
        Vec3 base;
        if (far) {
            base = {rng.uniform(-half + 1.0, half - 1.0), p.camera_height,
                    rng.uniform(std::min(traj_end + 10.0, corridor_end(p) - 2.0), corridor_end(p) - 1.0)};
        } else {
            const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
            base = {side * rng.uniform(road_edge, half - 0.8), p.camera_height,
                    rng.uniform(kCorridorStart + 2.0, corridor_end(p) - 1.0)};
        }
        const bool pillar = rng.uniform() < 0.4;
        const Vec3 extent = pillar ? Vec3(0.4, rng.uniform(2.5, 4.5), 0.4)
                                   : Vec3(rng.uniform(0.8, 1.6), rng.uniform(0.8, 1.8), rng.uniform(1.0, 3.0));
        const Vec3 color = hsv(rng.uniform(), rng.uniform(0.5, 0.9), rng.uniform(0.6, 0.95));
        const int n = (c == clusters - 1) ? count - placed : std::min(per_cluster, count - placed);
        const double r = std::max(0.08, std::cbrt(extent.prod() / std::max(n, 1)) * 0.6);
        for (int k = 0; k < n; ++k) {
            Splat s;
            s.center = {base.x() + rng.uniform(-0.5, 0.5) * extent.x(),
                        base.y() - rng.uniform(0.0, 1.0) * extent.y(),
                        base.z() + rng.uniform(-0.5, 0.5) * extent.z()};
            s.center.x() = std::clamp(s.center.x(), -half, half);
            s.center.z() = std::clamp(s.center.z(), kCorridorStart, corridor_end(p));
            s.scale = Vec3::Constant(r);
            const double shade = 0.75 + 0.25 * (s.center.y() - (base.y() - extent.y())) / extent.y();
            s.color = clamp01(color * shade + Vec3::Constant(rng.uniform(-0.04, 0.04)));
            s.opacity = 1.0;
            scene.splats.push_back(s);
        }
        placed += n;
    }
}

Aabb scene_bounds(const SceneParams& p) {
    const double half = 0.5 * p.corridor_width;
    return {Vec3(-half - 0.5, p.camera_height - p.wall_height - 0.5, kCorridorStart - 0.5),
            Vec3(half + 0.5, p.camera_height + 0.5, corridor_end(p) + 0.5)};
}

}  // namespace

void validate_scene_params(const SceneParams& p) {
    if (p.splat_count <= 0) fail(ErrorKind::InvalidParams, "splat_count must be positive");
    if (p.trajectory_length <= 0) fail(ErrorKind::InvalidParams, "trajectory_length must be positive");
    if (!(p.corridor_width > 2.0 * kSideMargin) || !(p.corridor_length > 10.0)) {
        fail(ErrorKind::InvalidParams, "corridor is too small");
    }
    if (!(p.speed >= 0.0) || !std::isfinite(p.curvature) || std::abs(p.curvature) > 0.3) {
        fail(ErrorKind::InvalidParams, "speed must be non-negative and |curvature| <= 0.3 rad/frame");
    }
    if (!(p.object_density >= 0.0) || !(p.camera_height > 0.0) || !(p.wall_height > 0.0) ||
        !(p.max_offset >= 0.0)) {
        fail(ErrorKind::InvalidParams, "densities and heights must be non-negative");
    }
}

void validate_splat(const Splat& s) {
    if (!(s.scale.array() > 0.0).all()) fail(ErrorKind::InvalidParams, "splat scales must be positive");
    if (!(s.opacity > 0.0 && s.opacity <= 1.0)) fail(ErrorKind::InvalidParams, "splat opacity outside (0, 1]");
    if (!((s.color.array() >= 0.0).all() && (s.color.array() <= 1.0).all())) {
        fail(ErrorKind::InvalidParams, "splat color outside [0, 1]");
    }
}

void validate_scene(const GaussianScene& scene) {
    if (scene.splats.empty()) fail(ErrorKind::InvalidParams, "scene has no splats");
    for (const auto& s : scene.splats) {
        validate_splat(s);
        if (!scene.bounds.contains(s.center)) fail(ErrorKind::InvalidParams, "splat center outside scene bounds");
    }
}

GaussianScene generate_scene(std::uint64_t seed, const SceneParams& params) {
    validate_scene_params(params);
    GaussianScene scene;
    scene.seed = seed;
    scene.bounds = scene_bounds(params);
    Rng rng(derive_seed(seed, {0x5ce7e}));
    const double tint = rng.uniform(-0.05, 0.05);
    scene.background = Vec3(0.55 + tint, 0.7 + tint, 0.9);

    const int n = params.splat_count;
    int ground = static_cast<int>(std::lround(n * kGroundFraction));
    int walls = static_cast<int>(std::lround(n * kWallFraction));
    if (params.object_density <= 0.0) walls = n - ground;
    ground = std::min(ground, n);
    walls = std::min(walls, n - ground);
    const int objects = n - ground - walls;

    scene.splats.reserve(static_cast<std::size_t>(n));
    add_ground(scene, rng, params, ground);
    add_walls(scene, rng, params, walls);
    add_objects(scene, rng, params, objects);
    // A corridor too small for any ground/wall share still honors the count.
    while (static_cast<int>(scene.splats.size()) < n) add_ground(scene, rng, params, 1);
    return scene;
}

Trajectory generate_trajectory(std::uint64_t seed, const SceneParams& params) {
    validate_scene_params(params);
    Rng rng(derive_seed(seed, {0x7a1ec}));
    Trajectory traj;
    traj.poses.reserve(static_cast<std::size_t>(params.trajectory_length));
    Vec3 position(rng.uniform(-0.5, 0.5), 0.0, rng.uniform(0.0, 1.0));
    double heading = 0.0;
    for (int i = 0; i < params.trajectory_length; ++i) {
        Pose pose{yaw_rotation(heading), position};
        traj.poses.push_back(pose);
        position += params.speed * pose.forward();
        heading += params.curvature;
    }

    const double limit = 0.5 * params.corridor_width - kSideMargin;
    for (const auto& pose : traj.poses) {
        for (double sign : {-1.0, 1.0}) {
            const Vec3 shifted = pose.translation + sign * params.max_offset * pose.right();
            if (std::abs(shifted.x()) > limit || shifted.z() < kCorridorStart + 1.0 ||
                shifted.z() > corridor_end(params) - 10.0) {
                fail(ErrorKind::InvalidParams,
                     fmt::format("trajectory leaves the corridor at ({:.3f}, {:.3f}) with offset {:+.1f} m",
                                 shifted.x(), shifted.z(), sign * params.max_offset));
            }
        }
    }
    return traj;
}

void write_splats_csv(std::ostream& os, const GaussianScene& scene) {
    os << "cx,cy,cz,sx,sy,sz,r,g,b,opacity\n";
    for (const auto& s : scene.splats) {
        os << fmt::format("{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n",
                          s.center.x(), s.center.y(), s.center.z(), s.scale.x(), s.scale.y(), s.scale.z(),
                          s.color.x(), s.color.y(), s.color.z(), s.opacity);
    }
}

}  // namespace recam
