// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "recam/curation.hpp"
#include "recam/net.hpp"
#include "recam/renderer.hpp"
#include "recam/scene.hpp"

namespace recam {

inline constexpr double kPsnrCapDb = 99.0;

/// 10*log10(1/mse) for clips in [0, 1]; kPsnrCapDb when mse < 1e-10.
/// Throws ErrorKind::InvalidParams on a shape mismatch.
double psnr(const VideoClip& a, const VideoClip& b);
double psnr_from_mse(double mse);

/// lo, lo+step, ..., hi (inclusive within half a step).
std::vector<double> offset_grid(double lo, double hi, double step);

/// Ground-truth renders of one scene along offset trajectories, keyed by offset.
class OffsetRenderCache {
public:
    const VideoClip& get(const GaussianScene& scene, const Trajectory& recorded, const Intrinsics& k, double delta,
                         const RenderOptions& options = {});
    std::size_t size() const { return renders_.size(); }

private:
    std::map<double, VideoClip> renders_;
};

/// Render of `scene` along recorded shifted by delta, with the same float
/// quantization applied at curation and inference time.
VideoClip render_offset(const GaussianScene& scene, const Trajectory& recorded, const Intrinsics& k, double delta,
                        const RenderOptions& options = {});

/// Grid-search offset estimate: the grid value whose ground-truth render
/// is closest in MSE to `generated`. Ties go to the smaller |delta|.
/// Throws ErrorKind::InvalidParams for an empty grid.
double estimate_offset(const VideoClip& generated, const GaussianScene& scene, const Trajectory& recorded,
                       const Intrinsics& k, const std::vector<double>& grid, OffsetRenderCache* cache = nullptr,
                       const RenderOptions& options = {});

/// Mean adjacent-frame normalized cross-correlation mapped from [-1, 1] to
/// [0, 1], after removing the clip-wide mean. Throws for fewer than 2 frames.
double temporal_consistency(const VideoClip& clip);

struct EvalConfig {
    std::uint64_t seed = 0;
    int scenes = 5;
    std::vector<double> offsets = {-3.0, -2.0, -1.0, 1.0, 2.0, 3.0};
    std::vector<double> grid = offset_grid(-5.0, 5.0, 0.25);
    int sample_steps = 16;
    int condition_level = 1;
    /// 0 feeds the clean recorded render as source; >0 degrades it first.
    int source_level = 0;
    SceneParams scene;
    Intrinsics intrinsics = Intrinsics::centered(48, 32);
    RenderOptions render;

    std::string canonical() const;
    std::uint64_t hash() const;
};

/// Frame count and image size of the eval config taken from the model.
EvalConfig eval_config_for(const ModelConfig& model, EvalConfig base = {});

/// Held-out scene seeds: distinct and always >= kHeldOutSeedBase.
std::vector<std::uint64_t> eval_scene_seeds(std::uint64_t seed, int count);

struct EvalScene {
    std::uint64_t seed = 0;
    GaussianScene scene;
    Trajectory recorded;
};

EvalScene make_eval_scene(std::uint64_t scene_seed, const EvalConfig& config);

struct EvalCase {
    const EvalScene* scene = nullptr;
    double delta = 0.0;
    InferencePair pair;
    VideoClip ground_truth;
    std::uint64_t sample_seed = 0;
};

EvalCase make_eval_case(const EvalScene& scene, double delta, const EvalConfig& config);

class Generator {
public:
    virtual ~Generator() = default;
    virtual VideoClip generate(const EvalCase& c) = 0;
};

/// Returns the ground truth untouched; used to self-test the harness.
class OracleGenerator final : public Generator {
public:
    VideoClip generate(const EvalCase& c) override { return c.ground_truth; }
};

/// Samples the model conditioned on the inference pair.
class ModelGenerator final : public Generator {
public:
    ModelGenerator(const DiffusionTransformer<float>& model, int steps) : model_(model), steps_(steps) {}
    VideoClip generate(const EvalCase& c) override;

private:
    DiffusionTransformer<float> model_;
    int steps_;
};

struct EvalRow {
    std::uint64_t scene_seed = 0;
    double delta = 0.0;
    double psnr_db = 0.0;
    double mse = 0.0;
    double terr_m = 0.0;
    double tconsist = 0.0;
};

struct EvalAggregate {
    std::size_t count = 0;
    double psnr_db = 0.0;
    double mse = 0.0;
    double terr_m = 0.0;
    double tconsist = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::map<double, EvalAggregate> per_delta;
    std::uint64_t config_hash = 0;
    std::uint64_t checkpoint_hash = 0;

    std::string to_csv() const;
    std::string summary_csv() const;
};

std::map<double, EvalAggregate> aggregate_rows(const std::vector<EvalRow>& rows);
double median(std::vector<double> values);

/// Called after each case with the generated clip, e.g. for frame dumps.
using CaseCallback = std::function<void(const EvalCase&, const VideoClip& generated, const EvalRow&)>;

EvalReport run_eval(Generator& generator, const EvalConfig& config, const CaseCallback& on_case = {});
/// Loads the checkpoint (never modifies it) and evaluates it. Throws
/// ErrorKind::Config when the model and eval clip shapes differ.
EvalReport run_eval(const std::filesystem::path& checkpoint, const EvalConfig& config,
                    const CaseCallback& on_case = {});

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace recam
