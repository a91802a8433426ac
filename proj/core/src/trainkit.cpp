// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/trainkit.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "recam/container.hpp"
#include "recam/error.hpp"
#include "recam/flow.hpp"
#include "recam/rng.hpp"

namespace recam {

const char* to_string(Preset preset) {
    switch (preset) {
        case Preset::None: return "none";
        case Preset::PoseOnly: return "pose-only";
        case Preset::OneStage: return "one-stage";
        case Preset::Longitudinal: return "longitudinal";
        case Preset::RepairBaseline: return "repair-baseline";
    }
    return "none";
}

Preset parse_preset(const std::string& text) {
    if (text == "none") return Preset::None;
    if (text == "pose-only") return Preset::PoseOnly;
    if (text == "one-stage") return Preset::OneStage;
    if (text == "longitudinal" || text == "longitudinal-data") return Preset::Longitudinal;
    if (text == "repair-baseline") return Preset::RepairBaseline;
    fail(ErrorKind::Config, "unknown preset '" + text + "'");
}

void validate_train_config(const TrainConfig& c) {
    if (c.stage != 1 && c.stage != 2) fail(ErrorKind::Config, fmt::format("unknown stage {}", c.stage));
    if (c.steps < 1 || c.batch < 1 || !(c.lr > 0.0)) fail(ErrorKind::Config, "steps, batch and lr must be positive");
    if (c.stop_at > c.steps) fail(ErrorKind::Config, "stop_at exceeds the schedule length");
    if (c.stage == 2 && !c.init && !c.resume && c.preset != Preset::OneStage) {
        fail(ErrorKind::Config, "stage 2 requires an init checkpoint");
    }
    if (c.preset == Preset::PoseOnly && c.stage != 1) fail(ErrorKind::Config, "pose-only has no stage 2");
    c.model.validate();
}

TrainConfig apply_preset(TrainConfig c) {
    switch (c.preset) {
        case Preset::None:
            break;
        case Preset::PoseOnly:
            break;
        case Preset::OneStage:
            c.stage = 2;
            c.model.stage = 2;
            c.train_all = true;
            c.init.reset();
            break;
        case Preset::Longitudinal:
            c.data_mode = CurationMode::Longitudinal;
            break;
        case Preset::RepairBaseline:
            c.stage = 1;
            c.model.stage = 1;
            c.model.repair = true;
            c.train_all = true;
            c.init.reset();
            break;
    }
    if (c.preset != Preset::OneStage && c.preset != Preset::RepairBaseline) c.model.stage = c.stage;
    return c;
}

double cosine_lr(double base_lr, int step, int total_steps) {
    if (total_steps <= 0) return base_lr;
    return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
}

double clip_grad_norm(ParameterSet<float>& params, const std::vector<bool>& mask, double max_norm) {
    double sq = 0.0;
    auto& all = params.all();
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (mask[i] && all[i].grad.size() != 0) sq += all[i].grad.template cast<double>().squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const auto s = static_cast<float>(max_norm / norm);
        for (std::size_t i = 0; i < all.size(); ++i) {
            if (mask[i] && all[i].grad.size() != 0) all[i].grad *= s;
        }
    }
    return norm;
}

void optimizer_step(ParameterSet<float>& params, const std::vector<bool>& mask, AdamState& state, double lr) {
    auto& all = params.all();
    if (mask.size() != all.size()) fail(ErrorKind::InvalidParams, "mask size does not match parameter count");
    if (state.m.size() != all.size()) {
        state.m.resize(all.size());
        state.v.resize(all.size());
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (state.m[i].size() == 0) {
            state.m[i] = Matrix<float>::Zero(all[i].value.rows(), all[i].value.cols());
            state.v[i] = Matrix<float>::Zero(all[i].value.rows(), all[i].value.cols());
        }
        if (mask[i] && all[i].grad.size() != 0 && !all[i].grad.allFinite()) {
            fail(ErrorKind::Numeric, "non-finite gradient for " + all[i].name);
        }
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (!mask[i] || all[i].grad.size() == 0) continue;
        auto& p = all[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (Eigen::Index k = 0; k < p.value.size(); ++k) {
            const double g = p.grad.data()[k];
            const double mk = kAdamBeta1 * m.data()[k] + (1.0 - kAdamBeta1) * g;
            const double vk = kAdamBeta2 * v.data()[k] + (1.0 - kAdamBeta2) * g * g;
            m.data()[k] = static_cast<float>(mk);
            v.data()[k] = static_cast<float>(vk);
            const double update = lr * (mk / bc1) / (std::sqrt(vk / bc2) + kAdamEps);
            p.value.data()[k] = static_cast<float>(p.value.data()[k] - update);
        }
    }
}

// ---------------------------------------------------------------------------

namespace {

Tensor matrix_tensor(const Matrix<float>& m) {
    return Tensor::from_f32(std::span<const float>(m.data(), static_cast<std::size_t>(m.size())),
                            {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())});
}

Matrix<float> tensor_matrix(const Tensor& t) {
    if (t.dims.size() != 2) fail(ErrorKind::CorruptContainer, "checkpoint tensors must be 2-D");
    Matrix<float> m(static_cast<Eigen::Index>(t.dims[0]), static_cast<Eigen::Index>(t.dims[1]));
    const auto values = t.to_f32();
    std::copy(values.begin(), values.end(), m.data());
    return m;
}

std::map<std::string, std::string> parse_keyvals(const std::string& text, std::vector<std::string>& params,
                                                 std::vector<std::string>& adam) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line == "# recam checkpoint v1") header = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorKind::CorruptContainer, "malformed checkpoint line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "param") params.push_back(value);
        else if (key == "adam") adam.push_back(value);
        else kv[key] = value;
    }
    if (!header) fail(ErrorKind::CorruptContainer, "not a checkpoint container");
    return kv;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

ModelConfig parse_model_fields(const std::map<std::string, std::string>& kv) {
    auto get = [&](const char* key) -> int {
        auto it = kv.find(key);
        if (it == kv.end()) fail(ErrorKind::CorruptContainer, std::string("checkpoint missing ") + key);
        return std::stoi(it->second);
    };
    ModelConfig m;
    m.frames = get("frames");
    m.height = get("height");
    m.width = get("width");
    m.patch = get("patch");
    m.d_model = get("d_model");
    m.heads = get("heads");
    m.depth = get("depth");
    m.time_dim = get("time_dim");
    m.ffn_mult = get("ffn_mult");
    m.cam_hidden = get("cam_hidden");
    m.stage = get("stage");
    m.repair = get("repair") != 0;
    return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const ModelConfig& m = ckpt.model.config();
    const auto& params = ckpt.model.params().all();
    std::vector<Tensor> tensors;
    std::ostringstream manifest;
    manifest << "# recam checkpoint v1\n";
    manifest << "config_hash=" << hex64(m.hash()) << "\n";
    manifest << fmt::format(
        "frames={}\nheight={}\nwidth={}\npatch={}\nd_model={}\nheads={}\ndepth={}\ntime_dim={}\nffn_mult={}\n"
        "cam_hidden={}\nstage={}\nrepair={}\n",
        m.frames, m.height, m.width, m.patch, m.d_model, m.heads, m.depth, m.time_dim, m.ffn_mult, m.cam_hidden,
        ckpt.stage, m.repair ? 1 : 0);
    manifest << "step=" << ckpt.step << "\ntotal_steps=" << ckpt.total_steps << "\nseed=" << ckpt.seed
             << "\npreset=" << to_string(ckpt.preset) << "\nadam_t=" << ckpt.adam.t << "\n";
    for (const auto& p : params) {
        manifest << "param=" << p.name << "," << p.group << "," << tensors.size() << "\n";
        tensors.push_back(matrix_tensor(p.value));
    }
    if (ckpt.adam.m.size() == params.size()) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (ckpt.adam.m[i].size() == 0) continue;
            manifest << "adam=" << params[i].name << "," << tensors.size() << "," << tensors.size() + 1 << "\n";
            tensors.push_back(matrix_tensor(ckpt.adam.m[i]));
            tensors.push_back(matrix_tensor(ckpt.adam.v[i]));
        }
    }
    write_container(path, tensors, manifest.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const ContainerContents contents = read_container(path);
    std::vector<std::string> param_lines, adam_lines;
    const auto kv = parse_keyvals(contents.manifest, param_lines, adam_lines);
    const ModelConfig mc = parse_model_fields(kv);
    if (hex64(mc.hash()) != kv.at("config_hash")) {
        fail(ErrorKind::CorruptContainer, "checkpoint hash does not match its stored architecture");
    }

    ModelConfig shell_cfg = mc;
    shell_cfg.stage = 1;
    Checkpoint ckpt{DiffusionTransformer<float>(shell_cfg, 0), {}, 1, 0, 0, 0, Preset::None};
    ParameterSet<float> loaded;
    for (const auto& line : param_lines) {
        const auto f = split(line, ',');
        if (f.size() != 3) fail(ErrorKind::CorruptContainer, "malformed param line");
        const auto idx = std::stoul(f[2]);
        if (idx >= contents.tensors.size()) fail(ErrorKind::CorruptContainer, "param index out of range");
        loaded.add(f[0], f[1], tensor_matrix(contents.tensors[idx]));
    }
    if (loaded.has_group("rendering_attention")) ckpt.model.add_stage2_modules(0);
    auto& dst = ckpt.model.params();
    if (dst.size() != loaded.size()) fail(ErrorKind::IncompatibleConfig, "checkpoint parameter set does not match its config");
    for (const auto& p : loaded.all()) {
        auto& q = dst.get(p.name);
        if (q.group != p.group || q.value.rows() != p.value.rows() || q.value.cols() != p.value.cols()) {
            fail(ErrorKind::IncompatibleConfig, "checkpoint parameter " + p.name + " has the wrong shape or group");
        }
        q.value = p.value;
    }
    ckpt.adam.t = std::stoll(kv.at("adam_t"));
    if (!adam_lines.empty()) {
        ckpt.adam.m.assign(dst.size(), Matrix<float>());
        ckpt.adam.v.assign(dst.size(), Matrix<float>());
        std::map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < dst.size(); ++i) pos[dst.all()[i].name] = i;
        for (const auto& line : adam_lines) {
            const auto f = split(line, ',');
            if (f.size() != 3 || !pos.count(f[0])) fail(ErrorKind::CorruptContainer, "malformed adam line");
            const auto mi = std::stoul(f[1]), vi = std::stoul(f[2]);
            if (mi >= contents.tensors.size() || vi >= contents.tensors.size()) {
                fail(ErrorKind::CorruptContainer, "adam index out of range");
            }
            ckpt.adam.m[pos[f[0]]] = tensor_matrix(contents.tensors[mi]);
            ckpt.adam.v[pos[f[0]]] = tensor_matrix(contents.tensors[vi]);
        }
    }
    ckpt.stage = std::stoi(kv.at("stage"));
    ckpt.step = std::stoll(kv.at("step"));
    ckpt.total_steps = std::stoi(kv.at("total_steps"));
    ckpt.seed = std::stoull(kv.at("seed"));
    ckpt.preset = parse_preset(kv.at("preset"));
    return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
    Checkpoint ckpt = load_checkpoint(path);
    if (ckpt.model.config().hash() != expected.hash()) {
        fail(ErrorKind::IncompatibleConfig,
             fmt::format("checkpoint {} was trained with [{}], expected [{}]", path.string(),
                         ckpt.model.config().canonical(), expected.canonical()));
    }
    return ckpt;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRow>& rows) {
    std::ofstream os(path);
    if (!os) fail(ErrorKind::Io, "cannot open " + path.string());
    os << "step,loss,lr,stage\n";
    for (const auto& r : rows) os << fmt::format("{},{:.9g},{:.9g},{}\n", r.step, r.loss, r.lr, r.stage);
    if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

// ---------------------------------------------------------------------------

std::vector<BatchItem> draw_batch(std::uint64_t seed, int stage, int step, int batch, std::size_t dataset_size) {
    if (dataset_size == 0) fail(ErrorKind::InvalidParams, "dataset is empty");
    Rng rng(derive_seed(seed, {0x7a1, static_cast<std::uint64_t>(stage), static_cast<std::uint64_t>(step)}));
    std::vector<BatchItem> items(static_cast<std::size_t>(batch));
    for (auto& item : items) {
        item.triple = static_cast<std::size_t>(rng.below(dataset_size));
        item.t = static_cast<float>(sample_timestep(rng));
        item.noise_seed = rng.next_u64();
    }
    return items;
}

Conditioning<float> training_conditioning(const TrainingTriple& triple, const ModelConfig& model) {
    Conditioning<float> c;
    c.render = encode_latent<float>(triple.condition, model.patch);
    if (!model.repair) {
        c.source = encode_latent<float>(triple.source, model.patch);
        c.rel_poses = triple.rel_poses;
    }
    return c;
}

double batch_loss(DiffusionTransformer<float>& model, const Dataset& data, const std::vector<BatchItem>& batch,
                  bool accumulate, const std::vector<std::string>& frozen_groups) {
    const ModelConfig& mc = model.config();
    double total = 0.0;
    for (const auto& item : batch) {
        const TrainingTriple& triple = data.triples.at(item.triple);
        const Matrix<float> x1 = encode_latent<float>(triple.target, mc.patch);
        const Matrix<float> x0 = draw_noise(x1.rows(), x1.cols(), item.noise_seed);
        const Matrix<float> xt = interpolate(x0, x1, item.t);
        const Matrix<float> v = target_velocity(x0, x1);
        ad::Graph<float> g(accumulate);
        g.freeze_groups(frozen_groups);
        const Var pred = model.predict(g, xt, training_conditioning(triple, mc), item.t);
        const Var loss = g.mse(pred, v);
        const double value = g.value(loss)(0, 0);
        if (!std::isfinite(value)) fail(ErrorKind::Numeric, "non-finite loss");
        total += value;
        if (accumulate) g.backward(loss);
    }
    return total / static_cast<double>(batch.size());
}

TrainResult train_stage(const TrainConfig& config, const StepCallback& on_step) {
    const Dataset data = read_dataset(config.data);
    return train_stage(config, data, on_step);
}

TrainResult train_stage(const TrainConfig& raw, const Dataset& data, const StepCallback& on_step) {
    const TrainConfig config = apply_preset(raw);
    validate_train_config(config);
    if (data.triples.empty()) fail(ErrorKind::InvalidParams, "dataset has no triples");
    if (data.manifest.mode != config.data_mode) {
        fail(ErrorKind::Config, fmt::format("preset {} expects {} data, dataset is {}", to_string(config.preset),
                                            to_string(config.data_mode), to_string(data.manifest.mode)));
    }
    const auto& first = data.triples.front().target;
    if (first.frames() != config.model.frames || first.height() != config.model.height ||
        first.width() != config.model.width) {
        fail(ErrorKind::Config, fmt::format("dataset clips are {}x{}x{}, model expects {}x{}x{}", first.frames(),
                                            first.height(), first.width(), config.model.frames, config.model.height,
                                            config.model.width));
    }

    const std::uint64_t stage_seed = derive_seed(config.seed, {0x57a6e, static_cast<std::uint64_t>(config.stage)});
    Checkpoint ckpt{DiffusionTransformer<float>(config.model, stage_seed), {}, config.stage, 0, config.steps,
                    config.seed, config.preset};
    if (config.resume) {
        ckpt = load_checkpoint(*config.resume, config.model);
        if (ckpt.stage != config.stage || ckpt.preset != config.preset || ckpt.total_steps != config.steps ||
            ckpt.seed != config.seed) {
            fail(ErrorKind::IncompatibleConfig, "resume checkpoint belongs to a different run");
        }
    } else if (config.stage == 2 && config.init) {
        Checkpoint init = load_checkpoint(*config.init, config.model);
        ckpt.model = std::move(init.model);
        if (!ckpt.model.params().has_group("rendering_attention")) ckpt.model.add_stage2_modules(stage_seed);
    }

    const MaskOptions mask_options{config.stage2_train_ffn, config.train_all};
    const std::vector<bool> mask = trainable_mask(ckpt.model.params(), config.stage, mask_options);
    std::vector<std::string> frozen;
    for (auto group : kParameterGroups) {
        if (!group_trainable(group, config.stage, mask_options)) frozen.emplace_back(group);
    }

    std::vector<LossRow> log;
    const int stop = config.stop_at >= 0 ? config.stop_at : config.steps;
    for (int step = static_cast<int>(ckpt.step); step < stop; ++step) {
        const double lr = cosine_lr(config.lr, step, config.steps);
        auto& params = ckpt.model.params();
        params.zero_grad();
        const auto batch = draw_batch(config.seed, config.stage, step, config.batch, data.triples.size());
        double loss = 0.0;
        try {
            loss = batch_loss(ckpt.model, data, batch, true, frozen);
        } catch (const Error& e) {
            fail(e.kind(), fmt::format("step {} of stage {}: {}", step, config.stage, e.what()));
        }
        const float inv = 1.0f / static_cast<float>(batch.size());
        for (auto& p : params.all()) p.grad *= inv;
        clip_grad_norm(params, mask, config.grad_clip);
        optimizer_step(params, mask, ckpt.adam, lr);
        ckpt.step = step + 1;
        LossRow row{step, loss, lr, config.stage};
        log.push_back(row);
        if (on_step) on_step(row);
    }
    return TrainResult{std::move(ckpt), std::move(log)};
}

}  // namespace recam
