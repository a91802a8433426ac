// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <functional>
#include <map>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>
#include <string>
#include <vector>

#include "commands.hpp"
#include "recam/error.hpp"
#include "settings.hpp"

namespace {

using recam::RunConfig;

struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

struct Command {
    const char* name;
    const char* help;
    std::vector<FlagSpec> flags;
    std::function<void(const RunConfig&)> run;
};

const std::vector<FlagSpec> kSceneFlags = {
    {"--frames", "frames", "frames per clip"},
    {"--width", "width", "image width in pixels"},
    {"--height", "height", "image height in pixels"},
    {"--splats", "splats", "splats per scene"},
    {"--curvature", "curvature", "trajectory yaw rate, rad/frame"},
};

const std::vector<FlagSpec> kModelFlags = {
    {"--patch", "patch", "patch size"},
    {"--d-model", "d_model", "transformer width"},
    {"--heads", "heads", "attention heads"},
    {"--depth", "depth", "transformer blocks"},
    {"--time-dim", "time_dim", "timestep feature width"},
    {"--ffn-mult", "ffn_mult", "FFN expansion"},
    {"--cam-hidden", "cam_hidden", "camera encoder hidden width"},
};

const std::vector<FlagSpec> kEvalFlags = {
    {"--scenes-held-out", "scenes_held_out", "held-out scenes to evaluate"},
    {"--offsets", "eval_offsets", "lateral offsets to evaluate, meters"},
    {"--sample-steps", "sample_steps", "Euler steps"},
    {"--grid-min", "grid_min", "offset search grid start"},
    {"--grid-max", "grid_max", "offset search grid end"},
    {"--grid-step", "grid_step", "offset search grid step"},
    {"--condition-level", "condition_level", "degrade level of the inference condition"},
    {"--source-level", "source_level", "degrade level applied to the inference source (0 = clean)"},
};

const std::vector<FlagSpec> kTrainFlags = {
    {"--steps", "steps", "schedule length in steps"},
    {"--batch", "batch", "batch size"},
    {"--lr", "lr", "peak learning rate"},
    {"--grad-clip", "grad_clip", "global gradient norm limit"},
};

std::vector<FlagSpec> concat(std::initializer_list<std::vector<FlagSpec>> parts) {
    std::vector<FlagSpec> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

std::vector<Command> commands() {
    using namespace recam::cli;
    return {
        {"gen-data", "render and curate a training dataset",
         concat({{{"--scenes", "scenes", "training scenes"},
                  {"--offsets", "offsets", "lateral offsets, meters"},
                  {"--levels", "levels", "condition fidelity levels"},
                  {"--mode", "mode", "lateral or longitudinal"},
                  {"--out", "out", "output container"}},
                 kSceneFlags}),
         cmd_gen_data},
        {"train", "train one stage",
         concat({{{"--stage", "stage", "1 or 2"},
                  {"--data", "data", "dataset container"},
                  {"--stop-at", "stop_at", "stop early at this step"},
                  {"--init", "init", "stage-1 checkpoint for stage 2"},
                  {"--resume", "resume", "checkpoint to resume"},
                  {"--preset", "preset", "none|pose-only|one-stage|longitudinal|repair-baseline"},
                  {"--loss-log", "loss_log", "loss CSV path"},
                  {"--out", "out", "output checkpoint"}},
                 kTrainFlags, kModelFlags}),
         cmd_train},
        {"sample", "generate one shifted-trajectory clip",
         concat({{{"--ckpt", "ckpt", "checkpoint"},
                  {"--scene-seed", "scene_seed", "held-out scene seed (>= 10000)"},
                  {"--delta", "delta", "lateral offset, meters"},
                  {"--out", "out", "output directory"}},
                 kEvalFlags, kSceneFlags}),
         cmd_sample},
        {"eval", "evaluate a checkpoint on held-out scenes",
         concat({{{"--ckpt", "ckpt", "checkpoint"},
                  {"--report", "report", "report CSV"},
                  {"--summary", "summary", "per-offset summary CSV"},
                  {"--dump-dir", "dump_dir", "write side-by-side frames here"}},
                 kEvalFlags, kSceneFlags}),
         cmd_eval},
        {"ablate", "train and evaluate a matched pair of arms",
         concat({{{"--preset", "preset",
                   "pose-only|one-stage|longitudinal|repair-baseline|clean-vs-degraded-source"},
                  {"--scenes", "scenes", "training scenes"},
                  {"--offsets", "offsets", "training offsets, meters"},
                  {"--levels", "levels", "condition fidelity levels"},
                  {"--work-dir", "work_dir", "directory for datasets, checkpoints and reports"},
                  {"--out", "out", "comparison CSV"},
                  {"--scenes-held-out", "scenes_held_out", "held-out scenes to evaluate"},
                  {"--eval-offsets", "eval_offsets", "offsets to evaluate"},
                  {"--sample-steps", "sample_steps", "Euler steps"}},
                 kTrainFlags, kModelFlags, kSceneFlags}),
         cmd_ablate},
        {"render-debug", "render a scene without any model",
         concat({{{"--scene-seed", "scene_seed", "scene seed"},
                  {"--delta", "delta", "lateral offset, meters"},
                  {"--level", "level", "fidelity level 0..3"},
                  {"--out", "out", "output directory"}},
                 kSceneFlags}),
         cmd_render_debug},
        {"dump-splats", "write a scene's splats as CSV",
         concat({{{"--scene-seed", "scene_seed", "scene seed"}, {"--out", "out", "output CSV"}}, kSceneFlags}),
         cmd_dump_splats},
    };
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("recam");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

    CLI::App app{"recam: camera-controlled novel-trajectory video generation on synthetic scenes"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_file, seed, threads;
    bool quiet = false;
    app.add_option("--config", config_file, "key = value settings file");
    app.add_option("--seed", seed, "seed for all randomness");
    app.add_option("--threads", threads, "worker threads (1 is bit-reproducible)");
    app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

    const auto cmds = commands();
    std::map<std::string, std::string> values;
    std::vector<std::pair<CLI::App*, const Command*>> subs;
    for (const auto& cmd : cmds) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        for (const auto& f : cmd.flags) sub->add_option(f.flag, values[std::string(cmd.name) + f.flag], f.help);
        sub->add_flag("--overwrite", "replace existing outputs");
        sub->add_flag("--stage2-train-ffn", "also train FFN/norm parameters in stage 2");
        subs.emplace_back(sub, &cmd);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    if (quiet) spdlog::set_level(spdlog::level::warn);

    for (const auto& [sub, cmd] : subs) {
        if (!sub->parsed()) continue;
        try {
            RunConfig rc(recam::cli::default_settings());
            if (!config_file.empty()) rc.load_file(config_file);
            rc.load_env();
            if (!seed.empty()) rc.set("seed", seed, "--seed");
            if (!threads.empty()) rc.set("threads", threads, "--threads");
            for (const auto& f : cmd->flags) {
                if (sub->get_option(f.flag)->count() > 0) rc.set(f.key, values[std::string(cmd->name) + f.flag], f.flag);
            }
            if (sub->get_option("--overwrite")->count() > 0) rc.set("overwrite", "true", "--overwrite");
            if (sub->get_option("--stage2-train-ffn")->count() > 0) {
                rc.set("stage2_train_ffn", "true", "--stage2-train-ffn");
            }
            spdlog::info("{} with resolved config:", cmd->name);
            std::string dump = rc.dump();
            for (std::size_t pos = 0, next; pos < dump.size(); pos = next + 1) {
                next = dump.find('\n', pos);
                spdlog::info("  {}", dump.substr(pos, next - pos));
            }
            cmd->run(rc);
            return 0;
        } catch (const recam::Error& e) {
            spdlog::error("{}", e.what());
            const bool usage = e.kind() == recam::ErrorKind::Usage || e.kind() == recam::ErrorKind::Config;
            return usage ? 1 : 2;
        } catch (const std::exception& e) {
            spdlog::error("{}", e.what());
            return 2;
        }
    }
    return 1;
}
