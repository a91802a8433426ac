// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "recam/error.hpp"
#include "recam/flow.hpp"

namespace recam {
namespace {

Matrix<double> random_matrix(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix<double> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

TEST(Interpolate, EndpointsAreExact) {
    const Matrix<float> x0 = draw_noise(6, 5, 1), x1 = draw_noise(6, 5, 2);
    EXPECT_EQ(interpolate(x0, x1, 0.0f), x0);
    EXPECT_EQ(interpolate(x0, x1, 1.0f), x1);
    const Matrix<float> mid = interpolate(x0, x1, 0.5f);
    EXPECT_LE((mid - 0.5f * (x0 + x1)).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(Interpolate, RejectsBadInput) {
    const Matrix<double> a = random_matrix(2, 2, 1), b = random_matrix(2, 3, 2);
    EXPECT_THROW(interpolate(a, a, 1.5), Error);
    EXPECT_THROW(interpolate(a, a, -0.1), Error);
    EXPECT_THROW(interpolate(a, b, 0.5), Error);
}

TEST(TargetVelocity, MatchesFiniteDifference) {
    const Matrix<double> x0 = random_matrix(4, 3, 3), x1 = random_matrix(4, 3, 4);
    const Matrix<double> v = target_velocity(x0, x1);
    for (double t : {0.1, 0.5, 0.8}) {
        const double eps = 1e-3;
        const Matrix<double> fd = (interpolate(x0, x1, t + eps) - interpolate(x0, x1, t)) / eps;
        EXPECT_LE((fd - v).cwiseAbs().maxCoeff(), 1e-6);
    }
    EXPECT_EQ(target_velocity(x0, x0).norm(), 0.0);
    EXPECT_LE((target_velocity<double>(2 * x0, 2 * x1) - 2 * v).norm(), 1e-12);
}

TEST(FmLoss, Examples) {
    const Matrix<double> v = random_matrix(5, 4, 5);
    EXPECT_EQ(fm_loss(v, v), 0.0);
    EXPECT_NEAR(fm_loss<double>(v.array() + 1.0, v), 1.0, 1e-12);
    const Matrix<double> p = random_matrix(5, 4, 6);
    EXPECT_GE(fm_loss(p, v), 0.0);
    EXPECT_DOUBLE_EQ(fm_loss(p, v), fm_loss(v, p));
    Matrix<double> bad = v;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        fm_loss(bad, v);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numeric);
    }
}

TEST(FmLoss, GradientMatchesFormula) {
    const Matrix<double> p = random_matrix(3, 4, 7), v = random_matrix(3, 4, 8);
    const Matrix<double> g = fm_loss_grad(p, v);
    EXPECT_LE((g - 2.0 * (p - v) / 12.0).cwiseAbs().maxCoeff(), 1e-12);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        Matrix<double> a = p, b = p;
        a.data()[i] += h;
        b.data()[i] -= h;
        EXPECT_NEAR((fm_loss(a, v) - fm_loss(b, v)) / (2 * h), g.data()[i], 1e-6);
    }
}

TEST(SampleTimestep, UniformMeanAndRange) {
    Rng rng(9);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double t = sample_timestep(rng);
        ASSERT_GE(t, 0.0);
        ASSERT_LT(t, 1.0);
        sum += t;
    }
    EXPECT_GE(sum / 10000, 0.48);
    EXPECT_LE(sum / 10000, 0.52);
    Rng a(4), b(4);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_timestep(a), sample_timestep(b));
}

TEST(Euler, OracleFieldReachesTarget) {
    const Matrix<float> x0 = draw_noise(12, 7, 11);
    const Matrix<float> x1 = draw_noise(12, 7, 12) * 0.5f;
    const Matrix<float> v = target_velocity(x0, x1);
    for (int steps : {1, 4, 32}) {
        const Matrix<float> out = integrate_euler([&](const Matrix<float>&, float) { return v; }, x0, steps);
        EXPECT_LE((out - x1).norm() / x1.norm(), 1e-5f) << steps;
    }
    const Matrix<float> one = integrate_euler([&](const Matrix<float>&, float) { return v; }, x0, 1);
    EXPECT_EQ(one, (x0 + 1.0f * v).eval());
}

TEST(Euler, EvaluatesAtUniformTimes) {
    std::vector<float> times;
    integrate_euler(
        [&](const Matrix<float>& x, float t) {
            times.push_back(t);
            return Matrix<float>::Zero(x.rows(), x.cols()).eval();
        },
        Matrix<float>::Zero(1, 1), 4);
    EXPECT_EQ(times, (std::vector<float>{0.0f, 0.25f, 0.5f, 0.75f}));
}

TEST(Euler, ErrorsOnBadStepsAndDivergence) {
    EXPECT_THROW(integrate_euler([](const Matrix<float>& x, float) { return x; }, Matrix<float>::Ones(1, 1), 0),
                 Error);
    try {
        integrate_euler(
            [](const Matrix<float>& x, float) {
                return Matrix<float>::Constant(x.rows(), x.cols(), std::numeric_limits<float>::infinity()).eval();
            },
            Matrix<float>::Ones(1, 1), 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Numeric);
    }
}

ModelConfig test_config() {
    ModelConfig c;
    c.frames = 2;
    c.height = 8;
    c.width = 8;
    c.patch = 4;
    c.d_model = 16;
    c.heads = 2;
    c.depth = 1;
    c.time_dim = 8;
    c.ffn_mult = 2;
    c.cam_hidden = 8;
    return c;
}

TEST(Sample, DeterministicForFixedSeed) {
    ModelConfig c = test_config();
    DiffusionTransformer<float> model(c, 3);
    for (auto& p : model.params().all()) p.value.array() += 0.01f;
    Conditioning<float> cond;
    const int rows = c.frames * c.tokens_per_frame();
    cond.source = draw_noise(rows, c.latent_channels(), 1);
    cond.render = draw_noise(rows, c.latent_channels(), 2);
    cond.rel_poses.assign(c.frames, Pose::from_translation({2, 0, 0}));
    const VideoClip a = sample(model, cond, 4, 99);
    const VideoClip b = sample(model, cond, 4, 99);
    const VideoClip other = sample(model, cond, 4, 100);
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == other);
    EXPECT_EQ(a.frames(), c.frames);
    EXPECT_EQ(a.height(), c.height);
    for (float v : a.data()) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
    }
}

}  // namespace
}  // namespace recam
