// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

#include "recam/net.hpp"
#include "recam/rng.hpp"

namespace recam {

/// Point on the straight path t*x1 + (1 - t)*x0. Throws ErrorKind::InvalidParams
/// for t outside [0, 1] or mismatched shapes.
template <typename T>
Matrix<T> interpolate(const Matrix<T>& x0, const Matrix<T>& x1, T t);

/// d x_t / d t along the straight path: x1 - x0, independent of t.
template <typename T>
Matrix<T> target_velocity(const Matrix<T>& x0, const Matrix<T>& x1);

/// Mean squared difference. Throws ErrorKind::Numeric on non-finite input.
template <typename T>
T fm_loss(const Matrix<T>& predicted, const Matrix<T>& velocity);

/// d fm_loss / d predicted = 2 (predicted - velocity) / N.
template <typename T>
Matrix<T> fm_loss_grad(const Matrix<T>& predicted, const Matrix<T>& velocity);

/// Uniform draw in [0, 1).
inline double sample_timestep(Rng& rng) { return rng.uniform(); }

/// Unit Gaussian latent noise from a dedicated stream of `seed`.
Matrix<float> draw_noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

using VelocityField = std::function<Matrix<float>(const Matrix<float>& x, float t)>;

inline constexpr int kDefaultSampleSteps = 16;

/// Forward Euler from t = 0 to t = 1 with uniform steps of 1/steps; the
/// field is evaluated at t_k = k/steps. Throws ErrorKind::Numeric when the
/// state stops being finite.
Matrix<float> integrate_euler(const VelocityField& field, Matrix<float> x, int steps);

/// Noise at t = 0 drawn with `seed`, integrated with the model's velocity
/// and decoded to a clip clamped to [0, 1].
VideoClip sample(DiffusionTransformer<float>& model, const Conditioning<float>& cond, int steps, std::uint64_t seed);

}  // namespace recam
