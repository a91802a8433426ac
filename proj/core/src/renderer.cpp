// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "recam/error.hpp"
#include "recam/rng.hpp"

namespace recam {

FidelityLevel fidelity_level(int level) {
    static constexpr double kKeep[] = {1.0, 0.6, 0.35, 0.15};
    static constexpr double kInflate[] = {1.0, 1.5, 2.2, 3.0};
    static constexpr double kJitter[] = {0.0, 0.03, 0.05, 0.08};
    if (level < 0 || level > 3) fail(ErrorKind::InvalidParams, "fidelity level must be in 0..3");
    return {level, kKeep[level], kInflate[level], kJitter[level]};
}

GaussianScene degrade_scene(const GaussianScene& scene, const FidelityLevel& level, std::uint64_t seed) {
    if (level.level == 0) return scene;
    if (!(level.keep_fraction > 0.0 && level.keep_fraction <= 1.0) || !(level.scale_inflation >= 1.0)) {
        fail(ErrorKind::InvalidParams, "invalid fidelity level parameters");
    }
    const std::size_t n = scene.splats.size();
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(level.keep_fraction * n)));

    Rng rng(derive_seed(seed, {0xde9, static_cast<std::uint64_t>(level.level)}));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < keep; ++i) {
        std::swap(order[i], order[i + rng.below(n - i)]);
    }
    order.resize(keep);
    std::sort(order.begin(), order.end());

    GaussianScene out;
    out.background = scene.background;
    out.bounds = scene.bounds;
    out.seed = scene.seed;
    out.splats.reserve(keep);
    for (std::size_t idx : order) {
        Splat s = scene.splats[idx];
        s.scale *= level.scale_inflation;
        for (int c = 0; c < 3; ++c) {
            s.color(c) = std::clamp(s.color(c) + rng.uniform(-level.color_jitter, level.color_jitter), 0.0, 1.0);
        }
        out.splats.push_back(s);
    }
    return out;
}

namespace {

struct Footprint {
    double u, v, depth, sigma;
    std::size_t index;
};

}  // namespace

void render_frame(const GaussianScene& scene, const Pose& pose, const Intrinsics& k, VideoClip& out, int frame,
                  const RenderOptions& options) {
    const int w = k.width;
    const int h = k.height;
    std::vector<Footprint> visible;
    visible.reserve(scene.splats.size());
    const Mat3 rt = pose.rotation.transpose();
    for (std::size_t i = 0; i < scene.splats.size(); ++i) {
        const Splat& s = scene.splats[i];
        if (s.opacity <= 0.0) continue;
        const Vec3 c = rt * (s.center - pose.translation);
        if (c.z() < options.near_plane) continue;
        const double sigma = std::max(k.fx * s.scale.mean() / c.z(), options.min_sigma_px);
        const double u = k.fx * c.x() / c.z() + k.cx;
        const double v = k.fy * c.y() / c.z() + k.cy;
        const double reach = 3.0 * sigma;
        if (u + reach < -0.5 || u - reach > w - 0.5 || v + reach < -0.5 || v - reach > h - 0.5) continue;
        visible.push_back({u, v, c.z(), sigma, i});
    }
    std::sort(visible.begin(), visible.end(), [](const Footprint& a, const Footprint& b) {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.index < b.index;
    });

    std::vector<double> rgb(static_cast<std::size_t>(3) * w * h);
    for (int p = 0; p < w * h; ++p) {
        for (int c = 0; c < 3; ++c) rgb[static_cast<std::size_t>(c) * w * h + p] = scene.background(c);
    }
    constexpr double kMinAlpha = 1.0 / 255.0;
    constexpr double kMaxAlpha = 0.99;
    for (const auto& fp : visible) {
        const Splat& s = scene.splats[fp.index];
        const double reach = 3.0 * fp.sigma;
        const int x0 = std::max(0, static_cast<int>(std::ceil(fp.u - reach)));
        const int x1 = std::min(w - 1, static_cast<int>(std::floor(fp.u + reach)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(fp.v - reach)));
        const int y1 = std::min(h - 1, static_cast<int>(std::floor(fp.v + reach)));
        const double inv2s2 = 0.5 / (fp.sigma * fp.sigma);
        const double reach2 = reach * reach;
        for (int y = y0; y <= y1; ++y) {
            const double dy = y - fp.v;
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - fp.u;
                const double d2 = dx * dx + dy * dy;
                if (d2 > reach2) continue;
                const double alpha = std::min(kMaxAlpha, s.opacity * std::exp(-d2 * inv2s2));
                if (alpha < kMinAlpha) continue;
                const std::size_t p = static_cast<std::size_t>(y) * w + x;
                for (int c = 0; c < 3; ++c) {
                    double& dst = rgb[static_cast<std::size_t>(c) * w * h + p];
                    dst = alpha * s.color(c) + (1.0 - alpha) * dst;
                }
            }
        }
    }
    auto dst = out.frame(frame);
    for (std::size_t i = 0; i < rgb.size(); ++i) dst[i] = static_cast<float>(std::clamp(rgb[i], 0.0, 1.0));
}

VideoClip render_clip(const GaussianScene& scene, const Trajectory& traj, const Intrinsics& k,
                      const RenderOptions& options) {
    if (traj.poses.empty()) fail(ErrorKind::InvalidParams, "cannot render an empty trajectory");
    validate_intrinsics(k);
    const int frames = static_cast<int>(traj.size());
    VideoClip clip(frames, k.height, k.width);
    const int threads = std::clamp(options.threads, 1, frames);
    if (threads == 1) {
        for (int f = 0; f < frames; ++f) render_frame(scene, traj.poses[f], k, clip, f, options);
        return clip;
    }
    // Frames are independent; each worker writes only its own frames.
    {
        std::vector<std::jthread> workers;
        for (int t = 0; t < threads; ++t) {
            workers.emplace_back([&, t] {
                for (int f = t; f < frames; f += threads) render_frame(scene, traj.poses[f], k, clip, f, options);
            });
        }
    }
    return clip;
}

double gradient_energy(const VideoClip& clip) {
    double acc = 0.0;
    std::size_t count = 0;
    for (int f = 0; f < clip.frames(); ++f) {
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < clip.height(); ++y) {
                for (int x = 0; x < clip.width(); ++x) {
                    if (x + 1 < clip.width()) {
                        const double d = clip.at(f, c, y, x + 1) - clip.at(f, c, y, x);
                        acc += d * d;
                        ++count;
                    }
                    if (y + 1 < clip.height()) {
                        const double d = clip.at(f, c, y + 1, x) - clip.at(f, c, y, x);
                        acc += d * d;
                        ++count;
                    }
                }
            }
        }
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

}  // namespace recam
