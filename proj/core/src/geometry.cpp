// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/geometry.hpp"

#include <Eigen/LU>
#include <cmath>
#include <fmt/format.h>

#include "recam/error.hpp"

namespace recam {

Mat4 Pose::matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
}

std::array<double, 12> Pose::flatten() const {
    std::array<double, 12> out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out[r * 4 + c] = rotation(r, c);
        out[r * 4 + 3] = translation(r);
    }
    return out;
}

Pose Pose::unflatten(const std::array<double, 12>& values) {
    Pose p;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) p.rotation(r, c) = values[r * 4 + c];
        p.translation(r) = values[r * 4 + 3];
    }
    return p;
}

bool is_valid_pose(const Pose& pose) {
    if (!pose.rotation.allFinite() || !pose.translation.allFinite()) return false;
    const Mat3 gram = pose.rotation.transpose() * pose.rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > kPoseTolerance) return false;
    return std::abs(pose.rotation.determinant() - 1.0) <= kPoseTolerance;
}

void validate_pose(const Pose& pose) {
    if (!is_valid_pose(pose)) {
        fail(ErrorKind::InvalidPose,
             fmt::format("rotation is not a proper orthonormal matrix (det = {:.9g})",
                         pose.rotation.determinant()));
    }
}

Pose se3_inverse(const Pose& pose) {
    validate_pose(pose);
    Pose inv;
    inv.rotation = pose.rotation.transpose();
    inv.translation = -(inv.rotation * pose.translation);
    return inv;
}

Pose se3_compose(const Pose& a, const Pose& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose relative_pose(const Pose& source, const Pose& target) {
    return se3_compose(se3_inverse(target), source);
}

double max_abs_diff(const Pose& a, const Pose& b) {
    return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

Mat3 yaw_rotation(double radians) {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    Mat3 r;
    // Columns are the camera right, down and forward axes in world space.
    r << c, 0.0, s,
         0.0, 1.0, 0.0,
         -s, 0.0, c;
    return r;
}

void validate_trajectory(const Trajectory& traj) {
    if (traj.poses.empty()) fail(ErrorKind::InvalidParams, "trajectory is empty");
    for (const auto& p : traj.poses) validate_pose(p);
}

Trajectory lateral_offset_trajectory(const Trajectory& traj, double delta) {
    Trajectory out = traj;
    for (auto& p : out.poses) p.translation += delta * p.rotation.col(0);
    return out;
}

std::vector<Pose> relative_poses(const Trajectory& source, const Trajectory& target) {
    if (source.size() != target.size()) {
        fail(ErrorKind::InvalidParams,
             fmt::format("trajectory lengths differ: {} vs {}", source.size(), target.size()));
    }
    std::vector<Pose> out;
    out.reserve(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        out.push_back(relative_pose(source.poses[i], target.poses[i]));
    }
    return out;
}

Trajectory slice_trajectory(const Trajectory& traj, std::size_t begin, std::size_t count) {
    if (begin + count > traj.size()) {
        fail(ErrorKind::InvalidParams,
             fmt::format("slice [{}, {}) exceeds trajectory length {}", begin, begin + count,
                         traj.size()));
    }
    Trajectory out;
    out.frame_rate = traj.frame_rate;
    out.poses.assign(traj.poses.begin() + static_cast<std::ptrdiff_t>(begin),
                     traj.poses.begin() + static_cast<std::ptrdiff_t>(begin + count));
    return out;
}

Trajectory quantize_to_float(const Trajectory& traj) {
    Trajectory out = traj;
    for (auto& p : out.poses) {
        p.rotation = p.rotation.cast<float>().cast<double>();
        p.translation = p.translation.cast<float>().cast<double>();
    }
    return out;
}

Intrinsics Intrinsics::centered(int width, int height) {
    Intrinsics k;
    k.width = width;
    k.height = height;
    k.fx = 0.5 * width;
    k.fy = 0.5 * width;
    k.cx = 0.5 * (width - 1);
    k.cy = 0.5 * (height - 1);
    return k;
}

void validate_intrinsics(const Intrinsics& k) {
    if (!(k.fx > 0.0) || !(k.fy > 0.0)) fail(ErrorKind::InvalidParams, "focal lengths must be positive");
    if (k.width <= 0 || k.height <= 0) fail(ErrorKind::InvalidParams, "image size must be positive");
    if (!(k.cx >= 0.0 && k.cx < k.width) || !(k.cy >= 0.0 && k.cy < k.height)) {
        fail(ErrorKind::InvalidParams, "principal point outside the image");
    }
}

Vec3 world_to_camera(const Vec3& world_point, const Pose& camera_to_world) {
    return camera_to_world.rotation.transpose() * (world_point - camera_to_world.translation);
}

Projection project(const Vec3& world_point, const Pose& camera_to_world, const Intrinsics& k) {
    const Vec3 c = world_to_camera(world_point, camera_to_world);
    if (!(c.z() > kMinProjectionDepth)) {
        fail(ErrorKind::BehindCamera, fmt::format("camera-frame depth {:.6g} is not positive", c.z()));
    }
    return {k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy, c.z()};
}

}  // namespace recam
