// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/net.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "recam/container.hpp"
#include "recam/error.hpp"
#include "recam/rng.hpp"

namespace recam {

void ModelConfig::validate() const {
    if (frames <= 0 || height <= 0 || width <= 0 || patch <= 0 || d_model <= 0 || heads <= 0 || depth <= 0 ||
        time_dim <= 0 || time_dim % 2 != 0 || ffn_mult <= 0 || cam_hidden <= 0) {
        fail(ErrorKind::Config, "model sizes must be positive (time_dim even)");
    }
    if (d_model % heads != 0) fail(ErrorKind::Config, fmt::format("d_model {} not divisible by heads {}", d_model, heads));
    if (height % patch != 0 || width % patch != 0) {
        fail(ErrorKind::Config, fmt::format("image {}x{} not divisible by patch {}", height, width, patch));
    }
    if (stage != 1 && stage != 2) fail(ErrorKind::Config, fmt::format("unknown stage {}", stage));
}

std::string ModelConfig::canonical() const {
    return fmt::format("F={};H={};W={};p={};d={};heads={};depth={};tdim={};ffn={};cam={};repair={}", frames, height,
                       width, patch, d_model, heads, depth, time_dim, ffn_mult, cam_hidden, repair ? 1 : 0);
}

std::uint64_t ModelConfig::hash() const { return fnv1a64(canonical()); }

TokenTensor<float> patchify(const VideoClip& clip, int patch) {
    if (patch <= 0 || clip.height() % patch != 0 || clip.width() % patch != 0) {
        fail(ErrorKind::Config, fmt::format("clip {}x{} not divisible by patch {}", clip.height(), clip.width(), patch));
    }
    const int gh = clip.height() / patch;
    const int gw = clip.width() / patch;
    TokenTensor<float> out;
    out.frames = clip.frames();
    out.tokens = gh * gw;
    out.channels = 3 * patch * patch;
    out.data.resize(static_cast<Eigen::Index>(out.frames) * out.tokens, out.channels);
    for (int f = 0; f < clip.frames(); ++f) {
        for (int ty = 0; ty < gh; ++ty) {
            for (int tx = 0; tx < gw; ++tx) {
                const Eigen::Index row = static_cast<Eigen::Index>(f) * out.tokens + ty * gw + tx;
                int ch = 0;
                for (int c = 0; c < 3; ++c) {
                    for (int py = 0; py < patch; ++py) {
                        for (int px = 0; px < patch; ++px) {
                            out.data(row, ch++) = clip.at(f, c, ty * patch + py, tx * patch + px);
                        }
                    }
                }
            }
        }
    }
    return out;
}

VideoClip unpatchify(const TokenTensor<float>& tokens, int height, int width, int patch) {
    if (patch <= 0 || height % patch != 0 || width % patch != 0) fail(ErrorKind::Config, "indivisible unpatchify dims");
    const int gh = height / patch;
    const int gw = width / patch;
    if (tokens.tokens != gh * gw || tokens.channels != 3 * patch * patch ||
        tokens.data.rows() != static_cast<Eigen::Index>(tokens.frames) * tokens.tokens ||
        tokens.data.cols() != tokens.channels) {
        fail(ErrorKind::Config, "token tensor does not match the requested clip size");
    }
    VideoClip clip(tokens.frames, height, width);
    for (int f = 0; f < tokens.frames; ++f) {
        for (int ty = 0; ty < gh; ++ty) {
            for (int tx = 0; tx < gw; ++tx) {
                const Eigen::Index row = static_cast<Eigen::Index>(f) * tokens.tokens + ty * gw + tx;
                int ch = 0;
                for (int c = 0; c < 3; ++c) {
                    for (int py = 0; py < patch; ++py) {
                        for (int px = 0; px < patch; ++px) {
                            clip.at(f, c, ty * patch + py, tx * patch + px) = tokens.data(row, ch++);
                        }
                    }
                }
            }
        }
    }
    return clip;
}

template <typename T>
Matrix<T> encode_latent(const VideoClip& clip, int patch) {
    const auto tokens = patchify(clip, patch);
    return (tokens.data.template cast<T>().array() * T(2) - T(1)).matrix();
}

VideoClip decode_latent(const Matrix<float>& latent, int frames, int height, int width, int patch) {
    TokenTensor<float> t;
    t.frames = frames;
    t.tokens = (height / patch) * (width / patch);
    t.channels = 3 * patch * patch;
    t.data = ((latent.array() + 1.0f) * 0.5f).matrix();
    VideoClip clip = unpatchify(t, height, width, patch);
    clip.clamp01();
    return clip;
}

template Matrix<float> encode_latent<float>(const VideoClip&, int);
template Matrix<double> encode_latent<double>(const VideoClip&, int);

// ---------------------------------------------------------------------------

template <typename T>
Parameter<T>& ParameterSet<T>::add(std::string name, std::string group, Matrix<T> value) {
    if (index_.count(name)) fail(ErrorKind::Config, "duplicate parameter " + name);
    if (std::find(kParameterGroups.begin(), kParameterGroups.end(), group) == kParameterGroups.end()) {
        fail(ErrorKind::Config, "unknown parameter group " + group);
    }
    index_[name] = params_.size();
    Parameter<T> p;
    p.name = std::move(name);
    p.group = std::move(group);
    p.value = std::move(value);
    params_.push_back(std::move(p));
    return params_.back();
}

template <typename T>
Parameter<T>& ParameterSet<T>::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::Config, "missing parameter " + name);
    return params_[it->second];
}

template <typename T>
const Parameter<T>& ParameterSet<T>::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorKind::Config, "missing parameter " + name);
    return params_[it->second];
}

template <typename T>
bool ParameterSet<T>::has_group(std::string_view group) const {
    return std::any_of(params_.begin(), params_.end(), [&](const auto& p) { return p.group == group; });
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
    for (auto& p : params_) p.grad = Matrix<T>::Zero(p.value.rows(), p.value.cols());
}

bool group_trainable(std::string_view group, int stage, const MaskOptions& options) {
    if (stage != 1 && stage != 2) fail(ErrorKind::Config, fmt::format("unknown stage {}", stage));
    if (options.train_all) return true;
    const bool stage2_group = group == "rendering_attention" || group == "cross_attention";
    if (stage == 1) return !stage2_group;
    if (options.stage2_train_ffn && group == "ffn_norm") return true;
    return stage2_group;
}

template <typename T>
std::vector<bool> trainable_mask(const ParameterSet<T>& params, int stage, const MaskOptions& options) {
    std::vector<bool> mask;
    mask.reserve(params.size());
    for (const auto& p : params.all()) mask.push_back(group_trainable(p.group, stage, options));
    return mask;
}

template std::vector<bool> trainable_mask<float>(const ParameterSet<float>&, int, const MaskOptions&);
template std::vector<bool> trainable_mask<double>(const ParameterSet<double>&, int, const MaskOptions&);

// ---------------------------------------------------------------------------

template <typename T>
Var assemble_input(ad::Graph<T>& g, Var x_t, Var x_s, Var c_r, Var c_i, Var e_f, int tokens_per_frame) {
    const Var target = g.add_frames(g.add_frames(x_t, c_r, tokens_per_frame), e_f, tokens_per_frame);
    const Var source = g.add_frames(g.add_frames(x_s, c_i, tokens_per_frame), e_f, tokens_per_frame);
    return g.concat_rows(target, source);
}

template <typename T>
Var assemble_rendering(ad::Graph<T>& g, Var x_gs, Var c_r, Var e_f, int tokens_per_frame) {
    return g.add_frames(g.add_frames(x_gs, c_r, tokens_per_frame), e_f, tokens_per_frame);
}

template Var assemble_input<float>(ad::Graph<float>&, Var, Var, Var, Var, Var, int);
template Var assemble_input<double>(ad::Graph<double>&, Var, Var, Var, Var, Var, int);
template Var assemble_rendering<float>(ad::Graph<float>&, Var, Var, Var, int);
template Var assemble_rendering<double>(ad::Graph<double>&, Var, Var, Var, int);

template <typename T>
Matrix<T> timestep_features(T t, int width) {
    const int half = width / 2;
    Matrix<T> out(1, width);
    for (int i = 0; i < half; ++i) {
        const T freq = std::exp(-std::log(T(10000)) * T(i) / T(half));
        const T arg = T(1000) * t * freq;
        out(0, i) = std::sin(arg);
        out(0, half + i) = std::cos(arg);
    }
    return out;
}

template Matrix<float> timestep_features<float>(float, int);
template Matrix<double> timestep_features<double>(double, int);

template <typename T>
Matrix<T> spatial_position_features(int grid_h, int grid_w, int width) {
    Matrix<T> out = Matrix<T>::Zero(static_cast<Eigen::Index>(grid_h) * grid_w, width);
    const int quarter = width / 4;
    const T span = T(std::max({grid_h, grid_w, 2}));
    for (int y = 0; y < grid_h; ++y) {
        for (int x = 0; x < grid_w; ++x) {
            const Eigen::Index row = static_cast<Eigen::Index>(y) * grid_w + x;
            for (int i = 0; i < quarter; ++i) {
                const T freq = T(M_PI) * std::exp(-std::log(span) * T(i) / T(quarter));
                out(row, i) = std::sin(T(y) * freq);
                out(row, quarter + i) = std::cos(T(y) * freq);
                out(row, 2 * quarter + i) = std::sin(T(x) * freq);
                out(row, 3 * quarter + i) = std::cos(T(x) * freq);
            }
        }
    }
    return out;
}

template Matrix<float> spatial_position_features<float>(int, int, int);
template Matrix<double> spatial_position_features<double>(int, int, int);

// ---------------------------------------------------------------------------

template <typename T>
DiffusionTransformer<T>::DiffusionTransformer(const ModelConfig& config, std::uint64_t seed) : config_(config) {
    config_.validate();
    const int d = config_.d_model;
    const int c = config_.latent_channels();
    Rng rng(derive_seed(seed, {0xba5e}));

    add_linear("tokenizer.in", "tokenizer", c, d, false, rng);
    if (config_.repair) add_linear("tokenizer.cond", "tokenizer", c, d, false, rng);
    if (!config_.repair) {
        add_linear("camera.fc1", "camera_encoder", 12, config_.cam_hidden, false, rng);
        add_linear("camera.fc2", "camera_encoder", config_.cam_hidden, d, false, rng);
    }
    Matrix<T> ef(config_.frames, d);
    for (Eigen::Index i = 0; i < ef.size(); ++i) ef.data()[i] = static_cast<T>(0.5 * rng.normal());
    params_.add("frame.embed", "frame_embedding", std::move(ef));

    add_linear("time.fc1", "ffn_norm", config_.time_dim, d, false, rng);
    add_linear("time.fc2", "ffn_norm", d, d, false, rng);
    for (int i = 0; i < config_.depth; ++i) {
        const std::string b = fmt::format("block{}.", i);
        add_linear(b + "mod", "ffn_norm", d, 6 * d, true, rng);
        add_linear(b + "attn.qkv", "self_attention", d, 3 * d, false, rng);
        add_linear(b + "attn.out", "self_attention", d, d, false, rng);
        add_linear(b + "ffn.fc1", "ffn_norm", d, config_.ffn_mult * d, false, rng);
        add_linear(b + "ffn.fc2", "ffn_norm", config_.ffn_mult * d, d, false, rng);
    }
    add_linear("head.mod", "output_head", d, 2 * d, true, rng);
    add_linear("head.out", "output_head", d, c, true, rng);

    if (config_.stage == 2 && !config_.repair) {
        config_.stage = 1;
        add_stage2_modules(derive_seed(seed, {0x57a9e2}));
    }
}

template <typename T>
void DiffusionTransformer<T>::add_stage2_modules(std::uint64_t seed) {
    if (config_.repair) fail(ErrorKind::Config, "the repair baseline has no rendering branch");
    if (params_.has_group("rendering_attention")) fail(ErrorKind::Config, "stage-2 modules already present");
    const int d = config_.d_model;
    Rng rng(derive_seed(seed, {0x2}));
    for (int i = 0; i < config_.depth; ++i) {
        const std::string b = fmt::format("block{}.", i);
        add_linear(b + "render.qkv", "rendering_attention", d, 3 * d, false, rng);
        add_linear(b + "render.out", "rendering_attention", d, d, false, rng);
        add_linear(b + "cross.q", "cross_attention", d, d, false, rng);
        add_linear(b + "cross.kv", "cross_attention", d, 2 * d, false, rng);
        add_linear(b + "cross.out", "cross_attention", d, d, true, rng);
        // keys start as the query projection so similar tokens attend to each other
        params_.get(b + "cross.kv.w").value.leftCols(d) = T(4) * params_.get(b + "cross.q.w").value;
    }
    config_.stage = 2;
}

template <typename T>
template <typename U>
DiffusionTransformer<U> DiffusionTransformer<T>::cast() const {
    DiffusionTransformer<U> out{typename DiffusionTransformer<U>::Empty{}};
    out.config_ = config_;
    for (const auto& p : params_.all()) out.params_.add(p.name, p.group, p.value.template cast<U>());
    return out;
}

template <typename T>
void DiffusionTransformer<T>::add_linear(const std::string& name, const std::string& group, int in, int out,
                                         bool zero, Rng& rng) {
    Matrix<T> w = Matrix<T>::Zero(in, out);
    if (!zero) {
        const double bound = std::sqrt(6.0 / (in + out));
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
    }
    params_.add(name + ".w", group, std::move(w));
    params_.add(name + ".b", group, Matrix<T>::Zero(1, out));
}

template <typename T>
Var DiffusionTransformer<T>::apply_linear(ad::Graph<T>& g, Var x, const std::string& name) {
    return g.linear(x, g.param(params_.get(name + ".w")), g.param(params_.get(name + ".b")));
}

template <typename T>
Var DiffusionTransformer<T>::encode_camera(ad::Graph<T>& g, std::span<const Pose> poses) {
    if (config_.repair) fail(ErrorKind::Config, "the repair baseline has no camera encoder");
    Matrix<T> flat(static_cast<Eigen::Index>(poses.size()), 12);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const auto f = poses[i].flatten();
        for (int j = 0; j < 12; ++j) flat(static_cast<Eigen::Index>(i), j) = static_cast<T>(f[j]);
    }
    const Var hidden = g.silu(apply_linear(g, g.constant(std::move(flat)), "camera.fc1"));
    return apply_linear(g, hidden, "camera.fc2");
}

template <typename T>
Var DiffusionTransformer<T>::frame_embedding(ad::Graph<T>& g) {
    return g.param(params_.get("frame.embed"));
}

template <typename T>
Var DiffusionTransformer<T>::tokenize(ad::Graph<T>& g, const Matrix<T>& latent) {
    if (latent.cols() != config_.latent_channels() ||
        latent.rows() != static_cast<Eigen::Index>(config_.frames) * config_.tokens_per_frame()) {
        fail(ErrorKind::Config, fmt::format("latent is {}x{}, model expects {}x{}", latent.rows(), latent.cols(),
                                            config_.frames * config_.tokens_per_frame(), config_.latent_channels()));
    }
    const int l = config_.tokens_per_frame();
    const Matrix<T> pos = spatial_position_features<T>(config_.grid_h(), config_.grid_w(), config_.d_model);
    Matrix<T> tiled(latent.rows(), config_.d_model);
    for (int f = 0; f < config_.frames; ++f) tiled.middleRows(static_cast<Eigen::Index>(f) * l, l) = pos;
    return g.add(apply_linear(g, g.constant(latent), "tokenizer.in"), g.constant(std::move(tiled)));
}

template <typename T>
Var DiffusionTransformer<T>::time_embedding(ad::Graph<T>& g, T t) {
    const Var feats = g.constant(timestep_features<T>(t, config_.time_dim));
    return apply_linear(g, g.silu(apply_linear(g, feats, "time.fc1")), "time.fc2");
}

template <typename T>
Var DiffusionTransformer<T>::self_attention(ad::Graph<T>& g, Var x, const std::string& prefix) {
    const int d = config_.d_model;
    const Var qkv = apply_linear(g, x, prefix + ".qkv");
    const Var a = g.attention(g.slice_cols(qkv, 0, d), g.slice_cols(qkv, d, d), g.slice_cols(qkv, 2 * d, d),
                              config_.heads);
    return apply_linear(g, a, prefix + ".out");
}

template <typename T>
Var DiffusionTransformer<T>::block(ad::Graph<T>& g, int i, Var h, Var* rendering, Var c) {
    const int d = config_.d_model;
    const std::string b = fmt::format("block{}.", i);
    const Var mod = apply_linear(g, g.silu(c), b + "mod");
    const Var shift1 = g.slice_cols(mod, 0, d), scale1 = g.slice_cols(mod, d, d), gate1 = g.slice_cols(mod, 2 * d, d);
    const Var shift2 = g.slice_cols(mod, 3 * d, d), scale2 = g.slice_cols(mod, 4 * d, d),
              gate2 = g.slice_cols(mod, 5 * d, d);

    h = g.add(h, g.gate(self_attention(g, g.modulate(g.layer_norm(h), shift1, scale1), b + "attn"), gate1));

    if (rendering != nullptr) {
        Var r = *rendering;
        r = g.add(r, self_attention(g, g.layer_norm(r), b + "render"));
        *rendering = r;
        const Var q = apply_linear(g, g.layer_norm(h), b + "cross.q");
        const Var kv = apply_linear(g, g.layer_norm(r), b + "cross.kv");
        const Var fused = g.attention(q, g.slice_cols(kv, 0, d), g.slice_cols(kv, d, d), config_.heads);
        h = g.add(h, apply_linear(g, fused, b + "cross.out"));
    }

    const Var ff = apply_linear(g, g.gelu(apply_linear(g, g.modulate(g.layer_norm(h), shift2, scale2), b + "ffn.fc1")),
                                b + "ffn.fc2");
    return g.add(h, g.gate(ff, gate2));
}

template <typename T>
Var DiffusionTransformer<T>::head(ad::Graph<T>& g, Var h, Var c) {
    const int d = config_.d_model;
    const int rows = config_.frames * config_.tokens_per_frame();
    const Var target = g.value(h).rows() == rows ? h : g.slice_rows(h, 0, rows);
    const Var mod = apply_linear(g, g.silu(c), "head.mod");
    const Var y = g.modulate(g.layer_norm(target), g.slice_cols(mod, 0, d), g.slice_cols(mod, d, d));
    return apply_linear(g, y, "head.out");
}

template <typename T>
Var DiffusionTransformer<T>::forward_stage1(ad::Graph<T>& g, Var x_i, T t) {
    const Var c = time_embedding(g, t);
    Var h = x_i;
    for (int i = 0; i < config_.depth; ++i) h = block(g, i, h, nullptr, c);
    return head(g, h, c);
}

template <typename T>
Var DiffusionTransformer<T>::forward_stage2(ad::Graph<T>& g, Var x_i, Var rendering, T t) {
    if (!params_.has_group("rendering_attention")) fail(ErrorKind::Config, "stage-2 parameters are missing");
    const Var c = time_embedding(g, t);
    Var h = x_i;
    Var r = rendering;
    for (int i = 0; i < config_.depth; ++i) h = block(g, i, h, &r, c);
    return head(g, h, c);
}

template <typename T>
Var DiffusionTransformer<T>::predict(ad::Graph<T>& g, const Matrix<T>& x_t, const Conditioning<T>& cond, T t) {
    const int l = config_.tokens_per_frame();
    const Var e_f = frame_embedding(g);
    if (config_.repair) {
        const Var cond_tokens = apply_linear(g, g.constant(cond.render), "tokenizer.cond");
        const Var x = g.add_frames(g.add(tokenize(g, x_t), cond_tokens), e_f, l);
        return forward_stage1(g, x, t);
    }
    if (cond.rel_poses.size() != static_cast<std::size_t>(config_.frames)) {
        fail(ErrorKind::Config, fmt::format("expected {} relative poses, got {}", config_.frames, cond.rel_poses.size()));
    }
    const Var c_r = encode_camera(g, cond.rel_poses);
    const std::vector<Pose> identity(static_cast<std::size_t>(config_.frames), Pose::identity());
    const Var c_i = encode_camera(g, identity);
    const Var x_i = assemble_input(g, tokenize(g, x_t), tokenize(g, cond.source), c_r, c_i, e_f, l);
    if (config_.stage == 1) return forward_stage1(g, x_i, t);
    const Var rendering = assemble_rendering(g, tokenize(g, cond.render), c_r, e_f, l);
    return forward_stage2(g, x_i, rendering, t);
}

template <typename T>
Matrix<T> DiffusionTransformer<T>::velocity(const Matrix<T>& x_t, const Conditioning<T>& cond, T t) {
    ad::Graph<T> g(false);
    const Var out = predict(g, x_t, cond, t);
    return g.value(out);
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template class DiffusionTransformer<float>;
template class DiffusionTransformer<double>;
template DiffusionTransformer<double> DiffusionTransformer<float>::cast<double>() const;
template DiffusionTransformer<float> DiffusionTransformer<double>::cast<float>() const;
template DiffusionTransformer<float> DiffusionTransformer<float>::cast<float>() const;

}  // namespace recam
