// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "recam/geometry.hpp"

namespace recam {

struct Splat {
    Vec3 center = Vec3::Zero();
    Vec3 scale = Vec3::Constant(0.1);  ///< per-axis standard deviation, meters
    Vec3 color = Vec3::Constant(0.5);
    double opacity = 1.0;
};

struct Aabb {
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();

    bool contains(const Vec3& p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
};

struct GaussianScene {
    std::vector<Splat> splats;
    Vec3 background = Vec3(0.55, 0.7, 0.9);
    Aabb bounds;
    std::uint64_t seed = 0;
};

/// Road-corridor layout knobs. World frame: +x right, +y down, +z along the
/// corridor; the ground plane sits camera_height meters below the camera.
struct SceneParams {
    int splat_count = 2000;
    double corridor_width = 16.0;
    double corridor_length = 60.0;
    double object_density = 0.25;  ///< object clusters per meter of corridor
    int trajectory_length = 8;     ///< frames
    double speed = 1.0;            ///< meters per frame
    double curvature = 0.0;        ///< yaw change per frame, radians
    double camera_height = 1.5;
    double wall_height = 6.0;
    double max_offset = 4.0;       ///< largest lateral shift the scene must accommodate
};

void validate_scene_params(const SceneParams& params);
void validate_splat(const Splat& s);
void validate_scene(const GaussianScene& scene);

/// Deterministic in (seed, params). Roughly half the splats texture the
/// ground, a quarter form the two walls and the rest build box and pillar
/// clusters beside the road and beyond its far end.
GaussianScene generate_scene(std::uint64_t seed, const SceneParams& params);

/// Forward drive starting near the corridor origin. Throws
/// ErrorKind::InvalidParams when any pose shifted by ±max_offset would leave
/// the drivable corridor.
Trajectory generate_trajectory(std::uint64_t seed, const SceneParams& params);

/// One row per splat: cx,cy,cz,sx,sy,sz,r,g,b,opacity.
void write_splats_csv(std::ostream& os, const GaussianScene& scene);

}  // namespace recam
