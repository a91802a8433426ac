// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "recam/geometry.hpp"
#include "recam/scene.hpp"
#include "recam/video.hpp"

namespace recam {

/// Stand-in for a partially trained splat checkpoint. Level 0 is the
/// converged scene; levels 1..3 grow progressively blurrier and sparser.
struct FidelityLevel {
    int level = 0;
    double keep_fraction = 1.0;
    double scale_inflation = 1.0;
    double color_jitter = 0.0;
};

/// Default ladder: keep {1.0, 0.6, 0.35, 0.15}, inflation {1.0, 1.5, 2.2, 3.0}.
FidelityLevel fidelity_level(int level);

/// Level 0 returns the scene unchanged. Otherwise keeps exactly
/// round(keep_fraction * n) splats (chosen by `seed`, original order
/// preserved), inflates their scales and jitters colors.
GaussianScene degrade_scene(const GaussianScene& scene, const FidelityLevel& level, std::uint64_t seed);

struct RenderOptions {
    int threads = 1;
    double near_plane = 0.2;     ///< splats closer than this are skipped
    double min_sigma_px = 0.5;   ///< footprint floor so sub-pixel splats stay visible
};

/// Painter's-order splatting: per frame, splats are projected, sorted
/// back to front (ties by index) and composited over the background with an
/// isotropic screen-space Gaussian of sigma fx*mean(scale)/depth, cut at 3 sigma.
VideoClip render_clip(const GaussianScene& scene, const Trajectory& traj, const Intrinsics& k,
                      const RenderOptions& options = {});

void render_frame(const GaussianScene& scene, const Pose& pose, const Intrinsics& k, VideoClip& out, int frame,
                  const RenderOptions& options = {});

/// Mean squared forward difference over both image axes; used to rank
/// sharpness across fidelity levels.
double gradient_energy(const VideoClip& clip);

}  // namespace recam
