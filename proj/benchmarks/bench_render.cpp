// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "recam/evalkit.hpp"
#include "recam/renderer.hpp"
#include "recam/scene.hpp"

namespace {

using namespace recam;

void BM_RenderClip(benchmark::State& state) {
    SceneParams params;
    params.splat_count = static_cast<int>(state.range(0));
    const GaussianScene scene = generate_scene(3, params);
    const Trajectory traj = generate_trajectory(3, params);
    const Intrinsics k = Intrinsics::centered(48, 32);
    for (auto _ : state) benchmark::DoNotOptimize(render_clip(scene, traj, k));
    state.SetItemsProcessed(state.iterations() * params.trajectory_length);
}
BENCHMARK(BM_RenderClip)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_DegradeScene(benchmark::State& state) {
    const GaussianScene scene = generate_scene(3, SceneParams{});
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(degrade_scene(scene, fidelity_level(2), ++seed));
}
BENCHMARK(BM_DegradeScene)->Unit(benchmark::kMicrosecond);

void BM_TemporalConsistency(benchmark::State& state) {
    SceneParams params;
    const GaussianScene scene = generate_scene(5, params);
    const VideoClip clip = render_clip(scene, generate_trajectory(5, params), Intrinsics::centered(48, 32));
    for (auto _ : state) benchmark::DoNotOptimize(temporal_consistency(clip));
}
BENCHMARK(BM_TemporalConsistency)->Unit(benchmark::kMicrosecond);

}  // namespace
