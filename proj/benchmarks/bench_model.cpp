// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "recam/flow.hpp"
#include "recam/net.hpp"
#include "recam/rng.hpp"

namespace {

using namespace recam;

ModelConfig bench_config(int d_model, int patch, int stage) {
    ModelConfig c;
    c.d_model = d_model;
    c.heads = d_model >= 64 ? 4 : 2;
    c.patch = patch;
    c.time_dim = 32;
    c.cam_hidden = 32;
    c.ffn_mult = 2;
    c.stage = stage;
    return c;
}

Conditioning<float> random_conditioning(const ModelConfig& c, Matrix<float>& x_t) {
    const int rows = c.frames * c.tokens_per_frame();
    x_t = draw_noise(rows, c.latent_channels(), 1);
    Conditioning<float> cond;
    cond.source = draw_noise(rows, c.latent_channels(), 2);
    cond.render = draw_noise(rows, c.latent_channels(), 3);
    cond.rel_poses.assign(static_cast<std::size_t>(c.frames), Pose::identity());
    return cond;
}

void BM_Forward(benchmark::State& state) {
    const ModelConfig c = bench_config(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
                                       static_cast<int>(state.range(2)));
    DiffusionTransformer<float> model(c, 1);
    Matrix<float> x_t;
    const auto cond = random_conditioning(c, x_t);
    for (auto _ : state) benchmark::DoNotOptimize(model.velocity(x_t, cond, 0.5f));
}
BENCHMARK(BM_Forward)->Args({32, 8, 1})->Args({32, 8, 2})->Args({64, 4, 2})->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
    const ModelConfig c = bench_config(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)),
                                       static_cast<int>(state.range(2)));
    DiffusionTransformer<float> model(c, 1);
    Matrix<float> x_t;
    const auto cond = random_conditioning(c, x_t);
    const Matrix<float> v = draw_noise(x_t.rows(), x_t.cols(), 4);
    for (auto _ : state) {
        model.params().zero_grad();
        ad::Graph<float> g;
        const Var loss = g.mse(model.predict(g, x_t, cond, 0.5f), v);
        g.backward(loss);
        benchmark::DoNotOptimize(g.value(loss)(0, 0));
    }
}
BENCHMARK(BM_ForwardBackward)->Args({32, 8, 1})->Args({32, 8, 2})->Args({64, 4, 2})->Unit(benchmark::kMillisecond);

}  // namespace
