// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "recam/curation.hpp"
#include "recam/net.hpp"

namespace recam {

enum class Preset { None, PoseOnly, OneStage, Longitudinal, RepairBaseline };

const char* to_string(Preset preset);
/// Accepts none, pose-only, one-stage, longitudinal, longitudinal-data and
/// repair-baseline. Throws ErrorKind::Config otherwise.
Preset parse_preset(const std::string& text);

struct TrainConfig {
    int stage = 1;
    int steps = 2000;           ///< length of the lr schedule
    int stop_at = -1;           ///< stop early at this step (checkpoint/resume); -1 runs to `steps`
    int batch = 4;
    double lr = 1e-3;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    std::filesystem::path data;
    std::optional<std::filesystem::path> init;    ///< stage-1 checkpoint for stage 2
    std::optional<std::filesystem::path> resume;  ///< continue a run of the same stage
    Preset preset = Preset::None;
    ModelConfig model;
    bool stage2_train_ffn = false;
    /// Dataset curation mode the preset expects; checked against the manifest.
    CurationMode data_mode = CurationMode::Lateral;
    bool train_all = false;  ///< set by presets that train every group at once
};

/// Throws ErrorKind::Config when stage 2 lacks an init checkpoint (outside
/// the one-stage preset) or a preset contradicts the stage.
void validate_train_config(const TrainConfig& config);

/// pose-only: stage 1 only, no rendering branch.
/// one-stage: stage-2 architecture trained jointly from scratch.
/// longitudinal: expects longitudinally curated data.
/// repair-baseline: single condition stream, no source, no camera.
TrainConfig apply_preset(TrainConfig config);

struct AdamState {
    std::vector<Matrix<float>> m;
    std::vector<Matrix<float>> v;
    std::int64_t t = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// One masked Adam update using each parameter's accumulated grad. Frozen
/// parameters and their moments are left untouched. Throws ErrorKind::Numeric
/// on non-finite gradients of trainable parameters.
void optimizer_step(ParameterSet<float>& params, const std::vector<bool>& mask, AdamState& state, double lr);

/// Scales trainable gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(ParameterSet<float>& params, const std::vector<bool>& mask, double max_norm);

double cosine_lr(double base_lr, int step, int total_steps);

struct Checkpoint {
    DiffusionTransformer<float> model;
    AdamState adam;
    int stage = 1;
    std::int64_t step = 0;
    int total_steps = 0;
    std::uint64_t seed = 0;
    Preset preset = Preset::None;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// As load_checkpoint, but throws ErrorKind::IncompatibleConfig when the
/// stored architecture hash differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

struct LossRow {
    int step = 0;
    double loss = 0.0;
    double lr = 0.0;
    int stage = 1;
};

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRow>& rows);

/// One training example drawn for a step.
struct BatchItem {
    std::size_t triple = 0;
    float t = 0.0f;
    std::uint64_t noise_seed = 0;
};

/// The examples of step `step`; depends only on (seed, stage, step) so that
/// resumed runs and side-by-side loss comparisons draw identical batches.
std::vector<BatchItem> draw_batch(std::uint64_t seed, int stage, int step, int batch, std::size_t dataset_size);

/// Conditioning for a training triple under the given model mode.
Conditioning<float> training_conditioning(const TrainingTriple& triple, const ModelConfig& model);

/// Mean flow-matching loss of `model` on a batch. When `accumulate` is set,
/// gradients of non-frozen groups are added into the parameters.
double batch_loss(DiffusionTransformer<float>& model, const Dataset& data, const std::vector<BatchItem>& batch,
                  bool accumulate, const std::vector<std::string>& frozen_groups = {});

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<LossRow> log;
};

using StepCallback = std::function<void(const LossRow&)>;

/// Runs the loop: draw batch, noise the target half, predict, flow-matching
/// loss, backprop, clip, masked Adam. Throws ErrorKind::Numeric with the step
/// number on a non-finite loss.
TrainResult train_stage(const TrainConfig& config, const StepCallback& on_step = {});
/// Same, with an already loaded dataset.
TrainResult train_stage(const TrainConfig& config, const Dataset& data, const StepCallback& on_step = {});

}  // namespace recam
