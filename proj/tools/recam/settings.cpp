// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "settings.hpp"

namespace recam::cli {

std::map<std::string, std::string> default_settings() {
    return {
        // shared
        {"seed", "0"},
        {"threads", "1"},
        {"out", ""},
        // dataset and scenes
        {"data", "data.pdt"},
        {"scenes", "4"},
        {"offsets", "-4,-3,-2,-1,1,2,3,4"},
        {"levels", "1,2,3"},
        {"mode", "lateral"},
        {"overwrite", "false"},
        {"splats", "2000"},
        {"corridor_width", "16"},
        {"corridor_length", "60"},
        {"object_density", "0.25"},
        {"frames", "8"},
        {"speed", "1"},
        {"curvature", "0"},
        {"camera_height", "1.5"},
        {"wall_height", "6"},
        {"max_offset", "4"},
        {"width", "48"},
        {"height", "32"},
        // model
        {"patch", "4"},
        {"d_model", "128"},
        {"heads", "4"},
        {"depth", "2"},
        {"time_dim", "64"},
        {"ffn_mult", "4"},
        {"cam_hidden", "64"},
        // training
        {"stage", "1"},
        {"steps", "2000"},
        {"stop_at", "-1"},
        {"batch", "4"},
        {"lr", "0.001"},
        {"grad_clip", "1"},
        {"init", ""},
        {"resume", ""},
        {"preset", "none"},
        {"loss_log", ""},
        {"stage2_train_ffn", "false"},
        // evaluation and sampling
        {"ckpt", ""},
        {"scenes_held_out", "5"},
        {"eval_offsets", "-3,-2,-1,1,2,3"},
        {"grid_min", "-5"},
        {"grid_max", "5"},
        {"grid_step", "0.25"},
        {"sample_steps", "16"},
        {"condition_level", "1"},
        {"source_level", "0"},
        {"report", "report.csv"},
        {"summary", ""},
        {"dump_dir", ""},
        {"scene_seed", "10000"},
        {"delta", "3"},
        {"level", "0"},
        // ablation
        {"work_dir", "ablate"},
    };
}

SceneParams scene_params(const RunConfig& rc) {
    SceneParams p;
    p.splat_count = rc.get_int("splats");
    p.corridor_width = rc.get_double("corridor_width");
    p.corridor_length = rc.get_double("corridor_length");
    p.object_density = rc.get_double("object_density");
    p.trajectory_length = rc.get_int("frames");
    p.speed = rc.get_double("speed");
    p.curvature = rc.get_double("curvature");
    p.camera_height = rc.get_double("camera_height");
    p.wall_height = rc.get_double("wall_height");
    p.max_offset = rc.get_double("max_offset");
    validate_scene_params(p);
    return p;
}

RenderOptions render_options(const RunConfig& rc) {
    RenderOptions o;
    o.threads = rc.get_int("threads");
    return o;
}

DatasetConfig dataset_config(const RunConfig& rc) {
    DatasetConfig c;
    c.seed = rc.get_u64("seed");
    c.scenes = rc.get_int("scenes");
    c.offsets = rc.get_doubles("offsets");
    c.levels = rc.get_ints("levels");
    c.mode = parse_curation_mode(rc.get("mode"));
    c.scene = scene_params(rc);
    c.intrinsics = Intrinsics::centered(rc.get_int("width"), rc.get_int("height"));
    c.overwrite = rc.get_bool("overwrite");
    c.threads = rc.get_int("threads");
    return c;
}

ModelConfig model_config(const RunConfig& rc) {
    ModelConfig m;
    m.frames = rc.get_int("frames");
    m.width = rc.get_int("width");
    m.height = rc.get_int("height");
    m.patch = rc.get_int("patch");
    m.d_model = rc.get_int("d_model");
    m.heads = rc.get_int("heads");
    m.depth = rc.get_int("depth");
    m.time_dim = rc.get_int("time_dim");
    m.ffn_mult = rc.get_int("ffn_mult");
    m.cam_hidden = rc.get_int("cam_hidden");
    m.stage = rc.get_int("stage");
    return m;
}

TrainConfig train_config(const RunConfig& rc) {
    TrainConfig t;
    t.stage = rc.get_int("stage");
    t.steps = rc.get_int("steps");
    t.stop_at = rc.get_int("stop_at");
    t.batch = rc.get_int("batch");
    t.lr = rc.get_double("lr");
    t.grad_clip = rc.get_double("grad_clip");
    t.seed = rc.get_u64("seed");
    t.data = rc.get("data");
    if (!rc.get("init").empty()) t.init = rc.get("init");
    if (!rc.get("resume").empty()) t.resume = rc.get("resume");
    t.preset = parse_preset(rc.get("preset"));
    t.model = model_config(rc);
    t.stage2_train_ffn = rc.get_bool("stage2_train_ffn");
    return t;
}

EvalConfig eval_config(const RunConfig& rc) {
    EvalConfig e;
    e.seed = rc.get_u64("seed");
    e.scenes = rc.get_int("scenes_held_out");
    e.offsets = rc.get_doubles("eval_offsets");
    e.grid = offset_grid(rc.get_double("grid_min"), rc.get_double("grid_max"), rc.get_double("grid_step"));
    e.sample_steps = rc.get_int("sample_steps");
    e.condition_level = rc.get_int("condition_level");
    e.source_level = rc.get_int("source_level");
    e.scene = scene_params(rc);
    e.intrinsics = Intrinsics::centered(rc.get_int("width"), rc.get_int("height"));
    e.render = render_options(rc);
    return e;
}

PipelineConfig pipeline_config(const RunConfig& rc) {
    PipelineConfig p;
    p.train = train_config(rc);
    p.train.stage = 1;
    p.train.preset = Preset::None;
    p.train.init.reset();
    p.train.resume.reset();
    p.eval = eval_config(rc);
    p.data = dataset_config(rc);
    p.data.mode = CurationMode::Lateral;
    p.work_dir = rc.get("work_dir");
    return p;
}

}  // namespace recam::cli
