// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "recam/flow.hpp"
#include "recam/net.hpp"
#include "recam/rng.hpp"

namespace recam::test {

/// d = 8, one block, two frames of a 2x2 token grid.
inline ModelConfig micro_config(int stage, bool repair = false) {
    ModelConfig c;
    c.frames = 2;
    c.height = 8;
    c.width = 8;
    c.patch = 4;
    c.d_model = 8;
    c.heads = 2;
    c.depth = 1;
    c.time_dim = 8;
    c.ffn_mult = 2;
    c.cam_hidden = 8;
    c.stage = stage;
    c.repair = repair;
    return c;
}

struct GroupCheck {
    std::size_t checked = 0;
    double max_rel_error = 0.0;
};

struct GradCheckResult {
    std::map<std::string, GroupCheck> groups;
    double max_rel_error = 0.0;
};

/// Flow-matching loss gradients of a 64-bit model against central
/// differences. Every parameter (including zero-initialized ones) is first
/// randomized so no path is trivially zero. Groups with more than
/// `per_group` scalars are sampled.
inline GradCheckResult gradient_check(const ModelConfig& config, std::uint64_t seed, std::size_t per_group = 100) {
    DiffusionTransformer<double> model(config, seed);
    Rng rng(derive_seed(seed, {0x9c}));
    for (auto& p : model.params().all()) {
        for (Eigen::Index k = 0; k < p.value.size(); ++k) p.value.data()[k] = 0.3 * rng.normal();
    }
    const int rows = config.frames * config.tokens_per_frame();
    const int cols = config.latent_channels();
    auto random_latent = [&] {
        Matrix<double> m(rows, cols);
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
        return m;
    };
    const Matrix<double> x0 = random_latent(), x1 = random_latent().array().tanh().matrix();
    const double t = 0.37;
    const Matrix<double> x_t = interpolate(x0, x1, t);
    const Matrix<double> v = target_velocity(x0, x1);
    Conditioning<double> cond;
    cond.render = random_latent();
    if (!config.repair) {
        cond.source = random_latent();
        Rng pose_rng(derive_seed(seed, {0x90}));
        for (int f = 0; f < config.frames; ++f) {
            cond.rel_poses.push_back(Pose::from_translation(
                Vec3(pose_rng.uniform(-4, 4), pose_rng.uniform(-0.5, 0.5), pose_rng.uniform(-1, 1))));
        }
    }
    auto loss = [&](bool track) {
        ad::Graph<double> g(track);
        const Var out = g.mse(model.predict(g, x_t, cond, t), v);
        if (track) g.backward(out);
        return g.value(out)(0, 0);
    };

    model.params().zero_grad();
    loss(true);
    std::map<std::string, std::vector<std::pair<std::size_t, Eigen::Index>>> by_group;
    auto& all = model.params().all();
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (Eigen::Index k = 0; k < all[i].value.size(); ++k) by_group[all[i].group].push_back({i, k});
    }

    GradCheckResult result;
    const double h = 1e-5;
    for (auto& [group, entries] : by_group) {
        if (entries.size() > per_group) {
            // partial Fisher-Yates: a deterministic sample of per_group entries
            for (std::size_t j = 0; j < per_group; ++j) {
                std::swap(entries[j], entries[j + rng.below(entries.size() - j)]);
            }
            entries.resize(per_group);
        }
        GroupCheck& gc = result.groups[group];
        for (const auto& [i, k] : entries) {
            double& w = all[i].value.data()[k];
            const double saved = w;
            w = saved + h;
            const double up = loss(false);
            w = saved - h;
            const double down = loss(false);
            w = saved;
            const double numeric = (up - down) / (2 * h);
            const double analytic = all[i].grad.size() ? all[i].grad.data()[k] : 0.0;
            const double rel =
                std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            gc.checked += 1;
            gc.max_rel_error = std::max(gc.max_rel_error, rel);
            result.max_rel_error = std::max(result.max_rel_error, rel);
        }
    }
    return result;
}

}  // namespace recam::test
