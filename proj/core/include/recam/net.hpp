// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recam/autograd.hpp"
#include "recam/geometry.hpp"
#include "recam/rng.hpp"
#include "recam/video.hpp"

namespace recam {

using ad::Matrix;
using ad::Parameter;
using ad::Var;

/// Parameter groups. Every parameter belongs to exactly one.
inline constexpr std::array<std::string_view, 8> kParameterGroups = {
    "tokenizer",       "camera_encoder", "frame_embedding",     "self_attention",
    "ffn_norm",        "output_head",    "rendering_attention", "cross_attention",
};

struct ModelConfig {
    int frames = 8;
    int height = 32;
    int width = 48;
    int patch = 4;
    int d_model = 128;
    int heads = 4;
    int depth = 2;
    int time_dim = 64;
    int ffn_mult = 4;
    int cam_hidden = 64;
    /// 1: pose-conditioned blocks only. 2: adds rendering and cross attention.
    int stage = 1;
    /// Single-stream restoration baseline: condition clip in, no source, no
    /// camera, no rendering attention.
    bool repair = false;

    int grid_h() const { return height / patch; }
    int grid_w() const { return width / patch; }
    int tokens_per_frame() const { return grid_h() * grid_w(); }
    int latent_channels() const { return 3 * patch * patch; }

    /// Throws ErrorKind::Config when d_model % heads != 0, the image is not
    /// divisible by the patch size, or a size is non-positive.
    void validate() const;
    /// Architecture dimensions only; stage and repair are excluded so a
    /// stage-1 checkpoint loads into a stage-2 model.
    std::string canonical() const;
    std::uint64_t hash() const;
};

/// f×l×c token lattice stored as an (f*l)×c matrix.
template <typename T>
struct TokenTensor {
    int frames = 0;
    int tokens = 0;
    int channels = 0;
    Matrix<T> data;
};

/// Pure rearrangement: each patch×patch cell becomes one token whose channels
/// are ordered (color, row, column). Lossless with unpatchify.
TokenTensor<float> patchify(const VideoClip& clip, int patch);
VideoClip unpatchify(const TokenTensor<float>& tokens, int height, int width, int patch);

/// Diffusion latent: patch tokens mapped from [0, 1] to [-1, 1].
template <typename T>
Matrix<T> encode_latent(const VideoClip& clip, int patch);
/// Inverse of encode_latent followed by clamping to [0, 1].
VideoClip decode_latent(const Matrix<float>& latent, int frames, int height, int width, int patch);

/// Ordered parameter storage with name lookup.
template <typename T>
class ParameterSet {
public:
    Parameter<T>& add(std::string name, std::string group, Matrix<T> value);
    Parameter<T>& get(const std::string& name);
    const Parameter<T>& get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) > 0; }
    bool has_group(std::string_view group) const;

    std::vector<Parameter<T>>& all() { return params_; }
    const std::vector<Parameter<T>>& all() const { return params_; }
    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;

    void zero_grad();

private:
    std::vector<Parameter<T>> params_;
    std::map<std::string, std::size_t> index_;
};

struct MaskOptions {
    bool stage2_train_ffn = false;
    /// Trains every group (single-stage and repair schedules).
    bool train_all = false;
};

/// Stage 1 trains every base group; stage 2 trains only rendering and cross
/// attention. Throws ErrorKind::Config for any other stage.
bool group_trainable(std::string_view group, int stage, const MaskOptions& options = {});
template <typename T>
std::vector<bool> trainable_mask(const ParameterSet<T>& params, int stage, const MaskOptions& options = {});

/// Inputs besides the noisy target latent. Latents are (f*l)×c matrices.
template <typename T>
struct Conditioning {
    Matrix<T> source;
    Matrix<T> render;
    std::vector<Pose> rel_poses;
};

template <typename T>
Var assemble_input(ad::Graph<T>& g, Var x_t, Var x_s, Var c_r, Var c_i, Var e_f, int tokens_per_frame);
template <typename T>
Var assemble_rendering(ad::Graph<T>& g, Var x_gs, Var c_r, Var e_f, int tokens_per_frame);

/// Sinusoidal embedding of t (scaled by 1000), half sine, half cosine.
template <typename T>
Matrix<T> timestep_features(T t, int width);

/// Fixed 2-D sin-cos encoding of token grid positions, (grid_h*grid_w)×width.
/// The first half of the columns encodes the row, the second the column.
template <typename T>
Matrix<T> spatial_position_features(int grid_h, int grid_w, int width);

/// Conditioned diffusion transformer operating on patch latents.
template <typename T>
class DiffusionTransformer {
public:
    DiffusionTransformer(const ModelConfig& config, std::uint64_t seed);

    template <typename U>
    DiffusionTransformer<U> cast() const;

    const ModelConfig& config() const { return config_; }
    ParameterSet<T>& params() { return params_; }
    const ParameterSet<T>& params() const { return params_; }

    /// Adds freshly initialized rendering and cross attention to every block
    /// (cross-attention output projections start at zero) and switches the
    /// config to stage 2. Existing parameters are left untouched.
    void add_stage2_modules(std::uint64_t seed);

    Var encode_camera(ad::Graph<T>& g, std::span<const Pose> poses);
    Var frame_embedding(ad::Graph<T>& g);
    Var tokenize(ad::Graph<T>& g, const Matrix<T>& latent);
    Var time_embedding(ad::Graph<T>& g, T t);

    /// x_i is the 2f*l-token sequence from assemble_input; returns the
    /// velocity for the first f*l tokens, (f*l)×c.
    Var forward_stage1(ad::Graph<T>& g, Var x_i, T t);
    /// Adds the rendering stream (f*l tokens) through rendering and cross attention.
    Var forward_stage2(ad::Graph<T>& g, Var x_i, Var rendering, T t);

    /// Full conditioned prediction for the configured stage or repair mode.
    Var predict(ad::Graph<T>& g, const Matrix<T>& x_t, const Conditioning<T>& cond, T t);
    Matrix<T> velocity(const Matrix<T>& x_t, const Conditioning<T>& cond, T t);

private:
    template <typename U>
    friend class DiffusionTransformer;

    struct Empty {};
    explicit DiffusionTransformer(Empty) {}

    void add_linear(const std::string& name, const std::string& group, int in, int out, bool zero, Rng& rng);
    Var apply_linear(ad::Graph<T>& g, Var x, const std::string& name);
    Var self_attention(ad::Graph<T>& g, Var x, const std::string& prefix);
    Var block(ad::Graph<T>& g, int i, Var h, Var* rendering, Var c);
    Var head(ad::Graph<T>& g, Var h, Var c);

    ModelConfig config_;
    ParameterSet<T> params_;
};

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class DiffusionTransformer<float>;
extern template class DiffusionTransformer<double>;

}  // namespace recam
