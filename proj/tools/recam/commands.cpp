// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <array>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <spdlog/spdlog.h>

#include "recam/error.hpp"
#include "recam/flow.hpp"
#include "settings.hpp"

namespace recam::cli {

namespace fs = std::filesystem;

namespace {

const std::string& required(const RunConfig& rc, const std::string& key, const char* flag) {
    const std::string& v = rc.get(key);
    if (v.empty()) fail(ErrorKind::Usage, fmt::format("missing required option {}", flag));
    return v;
}

void dump_frames(const fs::path& dir, const std::string& stem, const VideoClip& generated, const VideoClip& truth,
                 const VideoClip& condition) {
    fs::create_directories(dir);
    const std::array<const VideoClip*, 3> clips = {&generated, &truth, &condition};
    for (int f = 0; f < generated.frames(); ++f) {
        write_ppm_side_by_side(dir / fmt::format("{}_f{:02d}.ppm", stem, f), clips, f);
    }
}

}  // namespace

void cmd_gen_data(const RunConfig& rc) {
    const DatasetConfig config = dataset_config(rc);
    const fs::path out = rc.get("out").empty() ? fs::path(rc.get("data")) : fs::path(rc.get("out"));
    const DatasetManifest manifest = build_dataset(config, out);
    spdlog::info("wrote {} triples to {} (config hash {})", manifest.descriptors.size(), out.string(),
                 hex64(manifest.config_hash));
    for (const auto& [delta, n] : manifest.counts_per_offset) spdlog::info("  delta {:+g} m: {} triples", delta, n);
}

void cmd_train(const RunConfig& rc) {
    TrainConfig config = train_config(rc);
    const fs::path out = required(rc, "out", "--out");
    const Dataset data = read_dataset(config.data);
    if (data.triples.empty()) fail(ErrorKind::InvalidParams, "dataset is empty");
    const auto& clip = data.triples.front().target;
    if (clip.frames() != config.model.frames || clip.height() != config.model.height ||
        clip.width() != config.model.width) {
        spdlog::info("using dataset clip shape {}x{}x{}", clip.frames(), clip.height(), clip.width());
        config.model.frames = clip.frames();
        config.model.height = clip.height();
        config.model.width = clip.width();
    }
    spdlog::info("training stage {} preset {} on {} triples", config.stage, to_string(config.preset),
                 data.triples.size());
    const TrainResult result = train_stage(config, data, [](const LossRow& row) {
        if (row.step % 100 == 0) spdlog::info("step {} loss {:.5f} lr {:.3e}", row.step, row.loss, row.lr);
    });
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_checkpoint(out, result.checkpoint);
    fs::path log = rc.get("loss_log");
    if (log.empty()) {
        log = out;
        log.replace_extension(".loss.csv");
    }
    write_loss_csv(log, result.log);
    spdlog::info("checkpoint {} (step {}), loss log {}", out.string(), result.checkpoint.step, log.string());
}

void cmd_sample(const RunConfig& rc) {
    const fs::path ckpt_path = required(rc, "ckpt", "--ckpt");
    const fs::path out = rc.get("out").empty() ? fs::path("frames") : fs::path(rc.get("out"));
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const EvalConfig config = eval_config_for(ckpt.model.config(), eval_config(rc));
    const EvalScene scene = make_eval_scene(rc.get_u64("scene_seed"), config);
    const EvalCase c = make_eval_case(scene, rc.get_double("delta"), config);
    ModelGenerator generator(ckpt.model, config.sample_steps);
    const VideoClip generated = generator.generate(c);
    fs::create_directories(out);
    for (int f = 0; f < generated.frames(); ++f) write_ppm(out / fmt::format("sample_f{:02d}.ppm", f), generated, f);
    dump_frames(out, "compare", generated, c.ground_truth, c.pair.condition);
    spdlog::info("scene {} delta {:+g}: psnr {:.2f} dB, frames in {}", scene.seed, c.delta,
                 psnr(generated, c.ground_truth), out.string());
}

void cmd_eval(const RunConfig& rc) {
    const fs::path ckpt_path = required(rc, "ckpt", "--ckpt");
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const EvalConfig config = eval_config_for(ckpt.model.config(), eval_config(rc));
    const fs::path dump = rc.get("dump_dir");
    CaseCallback on_case = [&](const EvalCase& c, const VideoClip& generated, const EvalRow& row) {
        spdlog::info("scene {} delta {:+g}: psnr {:.2f} terr {:.2f} tconsist {:.3f}", row.scene_seed, row.delta,
                     row.psnr_db, row.terr_m, row.tconsist);
        if (!dump.empty()) {
            dump_frames(dump, fmt::format("s{}_d{:+g}", row.scene_seed, row.delta), generated, c.ground_truth,
                        c.pair.condition);
        }
    };
    const EvalReport report = run_eval(ckpt_path, config, on_case);
    write_text_file(rc.get("report"), report.to_csv());
    if (!rc.get("summary").empty()) write_text_file(rc.get("summary"), report.summary_csv());
    for (const auto& [delta, a] : report.per_delta) {
        spdlog::info("delta {:+g}: mean psnr {:.2f} dB, terr {:.3f} m, tconsist {:.3f}", delta, a.psnr_db, a.terr_m,
                     a.tconsist);
    }
    spdlog::info("report {} ({} rows)", rc.get("report"), report.rows.size());
}

void cmd_ablate(const RunConfig& rc) {
    const Ablation ablation = parse_ablation(rc.get("preset"));
    const PipelineConfig config = pipeline_config(rc);
    const AblationResult result =
        run_ablation(ablation, config, [](const std::string& msg) { spdlog::info("{}", msg); });
    const std::string csv = comparison_csv(result.rows);
    if (!rc.get("out").empty()) write_text_file(rc.get("out"), csv);
    for (const auto& r : result.rows) {
        spdlog::info("{}: {} {:.4f} vs {} {:.4f} (delta {:+.4f})", r.metric, r.reference_arm, r.reference,
                     r.ablated_arm, r.ablated, r.delta());
    }
}

void cmd_render_debug(const RunConfig& rc) {
    const SceneParams params = scene_params(rc);
    const std::uint64_t seed = rc.get_u64("scene_seed");
    const GaussianScene scene = generate_scene(seed, params);
    const Trajectory recorded = generate_trajectory(seed, params);
    const Intrinsics k = Intrinsics::centered(rc.get_int("width"), rc.get_int("height"));
    const int level = rc.get_int("level");
    const GaussianScene shown = degrade_scene(scene, fidelity_level(level), derive_seed(rc.get_u64("seed"), {seed}));
    const VideoClip clip = render_offset(shown, recorded, k, rc.get_double("delta"), render_options(rc));
    const fs::path out = rc.get("out").empty() ? fs::path("render") : fs::path(rc.get("out"));
    fs::create_directories(out);
    for (int f = 0; f < clip.frames(); ++f) write_ppm(out / fmt::format("frame_{:02d}.ppm", f), clip, f);
    spdlog::info("rendered {} frames of scene {} (level {}, {} splats) to {}", clip.frames(), seed, level,
                 shown.splats.size(), out.string());
}

void cmd_dump_splats(const RunConfig& rc) {
    const std::uint64_t seed = rc.get_u64("scene_seed");
    const GaussianScene scene = generate_scene(seed, scene_params(rc));
    const fs::path out = required(rc, "out", "--out");
    std::ofstream os(out);
    if (!os) fail(ErrorKind::Io, "cannot open " + out.string());
    write_splats_csv(os, scene);
    spdlog::info("wrote {} splats to {}", scene.splats.size(), out.string());
}

}  // namespace recam::cli
