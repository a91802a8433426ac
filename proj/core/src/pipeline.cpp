// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/pipeline.hpp"

#include <fmt/format.h>

#include "recam/container.hpp"
#include "recam/error.hpp"

namespace recam {

namespace fs = std::filesystem;

const char* to_string(Ablation a) {
    switch (a) {
        case Ablation::PoseOnly: return "pose-only";
        case Ablation::OneStage: return "one-stage";
        case Ablation::Longitudinal: return "longitudinal";
        case Ablation::RepairBaseline: return "repair-baseline";
        case Ablation::CleanVsDegradedSource: return "clean-vs-degraded-source";
    }
    return "pose-only";
}

Ablation parse_ablation(const std::string& text) {
    if (text == "pose-only") return Ablation::PoseOnly;
    if (text == "one-stage") return Ablation::OneStage;
    if (text == "longitudinal" || text == "longitudinal-data") return Ablation::Longitudinal;
    if (text == "repair-baseline") return Ablation::RepairBaseline;
    if (text == "clean-vs-degraded-source") return Ablation::CleanVsDegradedSource;
    fail(ErrorKind::Config, "unknown ablation preset '" + text + "'");
}

namespace {

void report(const Progress& progress, const std::string& msg) {
    if (progress) progress(msg);
}

StepCallback step_logger(const Progress& progress, const std::string& tag, int every) {
    if (!progress) return {};
    return [progress, tag, every](const LossRow& row) {
        if (row.step % every == 0) progress(fmt::format("{} step {} loss {:.5f} lr {:.2e}", tag, row.step, row.loss, row.lr));
    };
}

fs::path run_training(const TrainConfig& t, const Dataset& data, const fs::path& ckpt, const std::string& tag,
                      const Progress& progress) {
    report(progress, fmt::format("{}: training stage {} ({} steps, preset {})", tag, t.stage, t.steps,
                                 to_string(t.preset)));
    const TrainResult result = train_stage(t, data, step_logger(progress, tag, 250));
    fs::create_directories(ckpt.parent_path());
    save_checkpoint(ckpt, result.checkpoint);
    fs::path log = ckpt;
    log.replace_extension(".loss.csv");
    write_loss_csv(log, result.log);
    return ckpt;
}

ArmRun evaluate_arm(const std::string& name, const fs::path& ckpt, const EvalConfig& eval, const fs::path& dir,
                    const Progress& progress) {
    report(progress, fmt::format("{}: evaluating {}", name, ckpt.string()));
    ArmRun arm{name, ckpt, run_eval(ckpt, eval)};
    write_text_file(dir / fmt::format("report_{}.csv", name), arm.report.to_csv());
    return arm;
}

EvalConfig eval_for(const PipelineConfig& config) { return eval_config_for(config.train.model, config.eval); }

// The full two-stage model is shared by every ablation of one configuration.
TwoStagePaths shared_two_stage(const PipelineConfig& config, const fs::path& data, const Progress& progress) {
    const TrainConfig& t = config.train;
    const std::string key =
        fmt::format("{};steps={};batch={};lr={:.17g};clip={:.17g};seed={};ffn={};data={}", t.model.canonical(),
                    t.steps, t.batch, t.lr, t.grad_clip, t.seed, t.stage2_train_ffn ? 1 : 0, data.filename().string());
    const fs::path dir = config.work_dir / fmt::format("full_{}", hex64(fnv1a64(key)));
    TwoStagePaths paths{dir / "s1.ckpt", dir / "s2.ckpt"};
    if (fs::exists(paths.stage1) && fs::exists(paths.stage2)) {
        report(progress, fmt::format("reusing {}", dir.string()));
        return paths;
    }
    return train_two_stage(config, data, dir, Preset::None, progress);
}

}  // namespace

fs::path ensure_dataset(const PipelineConfig& config, CurationMode mode, const Progress& progress) {
    DatasetConfig dc = config.data;
    dc.mode = mode;
    dc.scene.trajectory_length = config.train.model.frames;
    dc.intrinsics = Intrinsics::centered(config.train.model.width, config.train.model.height);
    const fs::path path = config.work_dir / fmt::format("data_{}_{}.pdt", to_string(mode), hex64(dc.hash()));
    if (fs::exists(path)) return path;
    fs::create_directories(config.work_dir);
    report(progress, fmt::format("building {} dataset {}", to_string(mode), path.string()));
    build_dataset(dc, path);
    return path;
}

TwoStagePaths train_two_stage(const PipelineConfig& config, const fs::path& data_path, const fs::path& dir,
                              Preset preset, const Progress& progress) {
    const Dataset data = read_dataset(data_path);
    TrainConfig t = config.train;
    t.data = data_path;
    t.preset = preset;
    t.stage = 1;
    t.init.reset();
    t.resume.reset();
    TwoStagePaths paths;
    paths.stage1 = run_training(t, data, dir / "s1.ckpt", dir.filename().string(), progress);
    t.stage = 2;
    t.init = paths.stage1;
    paths.stage2 = run_training(t, data, dir / "s2.ckpt", dir.filename().string(), progress);
    return paths;
}

fs::path train_single(const PipelineConfig& config, Preset preset, const fs::path& data_path, const fs::path& dir,
                      const Progress& progress) {
    const Dataset data = read_dataset(data_path);
    TrainConfig t = config.train;
    t.data = data_path;
    t.preset = preset;
    t.steps = 2 * config.train.steps;
    t.stage = preset == Preset::OneStage ? 2 : 1;
    t.init.reset();
    t.resume.reset();
    return run_training(t, data, dir / fmt::format("{}.ckpt", to_string(preset)), dir.filename().string(), progress);
}

std::vector<ComparisonRow> compare_reports(const std::string& ablation, const ArmRun& reference,
                                           const ArmRun& ablated) {
    auto column = [](const EvalReport& r, double EvalRow::*field) {
        std::vector<double> out;
        for (const auto& row : r.rows) out.push_back(row.*field);
        return out;
    };
    std::vector<ComparisonRow> rows;
    const std::pair<const char*, double EvalRow::*> metrics[] = {
        {"median_psnr_db", &EvalRow::psnr_db},
        {"median_terr_m", &EvalRow::terr_m},
        {"median_tconsist", &EvalRow::tconsist},
        {"median_mse", &EvalRow::mse},
    };
    for (const auto& [name, field] : metrics) {
        rows.push_back({ablation, name, reference.name, median(column(reference.report, field)), ablated.name,
                        median(column(ablated.report, field))});
    }
    return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
    std::string out = "ablation,metric,reference_arm,reference,ablated_arm,ablated,delta\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{:.9g},{},{:.9g},{:.9g}\n", r.ablation, r.metric, r.reference_arm, r.reference,
                           r.ablated_arm, r.ablated, r.delta());
    }
    return out;
}

AblationResult run_ablation(Ablation ablation, const PipelineConfig& config, const Progress& progress) {
    const EvalConfig eval = eval_for(config);
    const fs::path lateral = ensure_dataset(config, CurationMode::Lateral, progress);
    const fs::path dir = config.work_dir / to_string(ablation);
    const TwoStagePaths full = shared_two_stage(config, lateral, progress);

    AblationResult result;
    const std::string name = to_string(ablation);
    switch (ablation) {
        case Ablation::PoseOnly:
            result.arms.push_back(evaluate_arm("full", full.stage2, eval, dir, progress));
            result.arms.push_back(evaluate_arm("pose-only", full.stage1, eval, dir, progress));
            break;
        case Ablation::OneStage: {
            result.arms.push_back(evaluate_arm("two-stage", full.stage2, eval, dir, progress));
            const fs::path one = train_single(config, Preset::OneStage, lateral, dir / "one-stage", progress);
            result.arms.push_back(evaluate_arm("one-stage", one, eval, dir, progress));
            break;
        }
        case Ablation::Longitudinal: {
            result.arms.push_back(evaluate_arm("lateral", full.stage2, eval, dir, progress));
            const fs::path lon_data = ensure_dataset(config, CurationMode::Longitudinal, progress);
            const TwoStagePaths lon =
                train_two_stage(config, lon_data, dir / "longitudinal", Preset::Longitudinal, progress);
            result.arms.push_back(evaluate_arm("longitudinal", lon.stage2, eval, dir, progress));
            break;
        }
        case Ablation::RepairBaseline: {
            result.arms.push_back(evaluate_arm("full", full.stage2, eval, dir, progress));
            const fs::path rep = train_single(config, Preset::RepairBaseline, lateral, dir / "repair", progress);
            result.arms.push_back(evaluate_arm("repair-baseline", rep, eval, dir, progress));
            break;
        }
        case Ablation::CleanVsDegradedSource: {
            EvalConfig degraded = eval;
            degraded.source_level = 1;
            result.arms.push_back(evaluate_arm("clean-source", full.stage2, eval, dir, progress));
            result.arms.push_back(evaluate_arm("degraded-source", full.stage2, degraded, dir, progress));
            break;
        }
    }
    result.rows = compare_reports(name, result.arms[0], result.arms[1]);
    write_text_file(dir / "comparison.csv", comparison_csv(result.rows));
    return result;
}

}  // namespace recam
