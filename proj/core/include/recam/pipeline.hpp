// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "recam/evalkit.hpp"
#include "recam/trainkit.hpp"

namespace recam {

/// Comparisons run by `ablate`. Each trains/evaluates a reference arm and
/// an ablated arm under a matched step budget.
enum class Ablation { PoseOnly, OneStage, Longitudinal, RepairBaseline, CleanVsDegradedSource };

const char* to_string(Ablation ablation);
Ablation parse_ablation(const std::string& text);

struct PipelineConfig {
    TrainConfig train;  ///< base settings; `steps` is the per-stage budget
    EvalConfig eval;
    DatasetConfig data;  ///< used to build the lateral / longitudinal datasets
    std::filesystem::path work_dir = "ablate";
};

/// Trained models of one seed, shared between comparisons.
struct ArmRun {
    std::string name;
    std::filesystem::path checkpoint;
    EvalReport report;
};

struct ComparisonRow {
    std::string ablation;
    std::string metric;
    std::string reference_arm;
    double reference = 0.0;
    std::string ablated_arm;
    double ablated = 0.0;
    double delta() const { return ablated - reference; }
};

struct AblationResult {
    std::vector<ArmRun> arms;
    std::vector<ComparisonRow> rows;
};

using Progress = std::function<void(const std::string&)>;

/// Builds (or reuses) the dataset for `mode` under work_dir.
std::filesystem::path ensure_dataset(const PipelineConfig& config, CurationMode mode, const Progress& progress = {});

struct TwoStagePaths {
    std::filesystem::path stage1;
    std::filesystem::path stage2;
};

/// Stage 1 then stage 2 from the stage-1 checkpoint. Writes s1.ckpt, s2.ckpt
/// and their loss logs under `dir`.
TwoStagePaths train_two_stage(const PipelineConfig& config, const std::filesystem::path& data,
                              const std::filesystem::path& dir, Preset preset = Preset::None,
                              const Progress& progress = {});

/// Single run of the given preset with twice the per-stage budget.
std::filesystem::path train_single(const PipelineConfig& config, Preset preset, const std::filesystem::path& data,
                                   const std::filesystem::path& dir, const Progress& progress = {});

/// The full two-stage model is trained once per configuration under
/// work_dir/full_<hash> and reused by later ablations.
AblationResult run_ablation(Ablation ablation, const PipelineConfig& config, const Progress& progress = {});

/// Median PSNR, median terr and median temporal consistency for both arms.
std::vector<ComparisonRow> compare_reports(const std::string& ablation, const ArmRun& reference,
                                           const ArmRun& ablated);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace recam
