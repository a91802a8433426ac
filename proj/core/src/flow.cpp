// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/flow.hpp"

#include <fmt/format.h>

#include "recam/error.hpp"

namespace recam {
namespace {

template <typename T>
void same_shape(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(ErrorKind::InvalidParams,
             fmt::format("shape mismatch {}x{} vs {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    }
}

}  // namespace

template <typename T>
Matrix<T> interpolate(const Matrix<T>& x0, const Matrix<T>& x1, T t) {
    same_shape(x0, x1);
    if (!(t >= T(0) && t <= T(1))) fail(ErrorKind::InvalidParams, fmt::format("t = {} outside [0, 1]", t));
    if (t == T(0)) return x0;
    if (t == T(1)) return x1;
    return t * x1 + (T(1) - t) * x0;
}

template <typename T>
Matrix<T> target_velocity(const Matrix<T>& x0, const Matrix<T>& x1) {
    same_shape(x0, x1);
    return x1 - x0;
}

template <typename T>
T fm_loss(const Matrix<T>& predicted, const Matrix<T>& velocity) {
    same_shape(predicted, velocity);
    if (!predicted.allFinite() || !velocity.allFinite()) fail(ErrorKind::Numeric, "non-finite flow-matching input");
    if (predicted.size() == 0) return T(0);
    return (predicted - velocity).squaredNorm() / static_cast<T>(predicted.size());
}

template <typename T>
Matrix<T> fm_loss_grad(const Matrix<T>& predicted, const Matrix<T>& velocity) {
    same_shape(predicted, velocity);
    return (predicted - velocity) * (T(2) / static_cast<T>(predicted.size()));
}

template Matrix<float> interpolate<float>(const Matrix<float>&, const Matrix<float>&, float);
template Matrix<double> interpolate<double>(const Matrix<double>&, const Matrix<double>&, double);
template Matrix<float> target_velocity<float>(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> target_velocity<double>(const Matrix<double>&, const Matrix<double>&);
template float fm_loss<float>(const Matrix<float>&, const Matrix<float>&);
template double fm_loss<double>(const Matrix<double>&, const Matrix<double>&);
template Matrix<float> fm_loss_grad<float>(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> fm_loss_grad<double>(const Matrix<double>&, const Matrix<double>&);

Matrix<float> draw_noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {0x9015e}));
    Matrix<float> x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.normal());
    return x;
}

Matrix<float> integrate_euler(const VelocityField& field, Matrix<float> x, int steps) {
    if (steps < 1) fail(ErrorKind::InvalidParams, "sampling needs at least one step");
    const float dt = 1.0f / static_cast<float>(steps);
    for (int k = 0; k < steps; ++k) {
        const float t = static_cast<float>(k) / static_cast<float>(steps);
        const Matrix<float> v = field(x, t);
        same_shape(v, x);
        x.noalias() += dt * v;
        if (!x.allFinite()) fail(ErrorKind::Numeric, fmt::format("sampler state became non-finite at step {}", k));
    }
    return x;
}

VideoClip sample(DiffusionTransformer<float>& model, const Conditioning<float>& cond, int steps, std::uint64_t seed) {
    const ModelConfig& c = model.config();
    const Matrix<float> x0 =
        draw_noise(static_cast<Eigen::Index>(c.frames) * c.tokens_per_frame(), c.latent_channels(), seed);
    const Matrix<float> x1 = integrate_euler(
        [&](const Matrix<float>& x, float t) { return model.velocity(x, cond, t); }, x0, steps);
    return decode_latent(x1, c.frames, c.height, c.width, c.patch);
}

}  // namespace recam
