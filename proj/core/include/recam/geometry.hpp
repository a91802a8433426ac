// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

namespace recam {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rigid camera-to-world transform. Camera axes follow the pinhole
/// convention: +x right, +y down, +z forward.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static Pose identity() { return {}; }
    static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

    Mat4 matrix() const;
    Vec3 right() const { return rotation.col(0); }
    Vec3 forward() const { return rotation.col(2); }

    /// Row-major 3x4 [R | t], the layout stored on disk and fed to the camera encoder.
    std::array<double, 12> flatten() const;
    static Pose unflatten(const std::array<double, 12>& values);

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

inline constexpr double kPoseTolerance = 1e-6;

/// Throws ErrorKind::InvalidPose when the rotation is not orthonormal with
/// determinant +1 within kPoseTolerance, or when any entry is non-finite.
void validate_pose(const Pose& pose);
bool is_valid_pose(const Pose& pose);

Pose se3_inverse(const Pose& pose);
/// a ∘ b: apply b first, then a.
Pose se3_compose(const Pose& a, const Pose& b);
/// Transform mapping source-camera coordinates into target-camera
/// coordinates, target⁻¹ ∘ source for camera-to-world poses.
Pose relative_pose(const Pose& source, const Pose& target);

double max_abs_diff(const Pose& a, const Pose& b);

/// Yaw rotation about the camera +y (down) axis. Positive angles turn the
/// forward axis toward +x.
Mat3 yaw_rotation(double radians);

struct Trajectory {
    std::vector<Pose> poses;
    double frame_rate = 10.0;

    std::size_t size() const { return poses.size(); }
};

void validate_trajectory(const Trajectory& traj);

/// Shifts every pose by delta meters along its own right axis; rotations are
/// copied untouched.
Trajectory lateral_offset_trajectory(const Trajectory& traj, double delta);

/// Per-frame relative poses source[i] -> target[i]. Lengths must agree.
std::vector<Pose> relative_poses(const Trajectory& source, const Trajectory& target);

/// Frames [begin, begin + count) of a trajectory.
Trajectory slice_trajectory(const Trajectory& traj, std::size_t begin, std::size_t count);

/// Rounds every pose entry to single precision, the storage precision of the
/// dataset container, so that stored and in-memory trajectories agree.
Trajectory quantize_to_float(const Trajectory& traj);

struct Intrinsics {
    double fx = 24.0;
    double fy = 24.0;
    double cx = 23.5;
    double cy = 15.5;
    int width = 48;
    int height = 32;

    /// Centered principal point and horizontal field of view of ~90 degrees.
    static Intrinsics centered(int width, int height);
};

void validate_intrinsics(const Intrinsics& k);

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

inline constexpr double kMinProjectionDepth = 1e-6;

/// Pixel coordinates have their origin at the center of the top-left pixel.
/// Throws ErrorKind::BehindCamera when camera-frame z <= kMinProjectionDepth.
Projection project(const Vec3& world_point, const Pose& camera_to_world, const Intrinsics& k);

/// Camera-frame coordinates of a world point.
Vec3 world_to_camera(const Vec3& world_point, const Pose& camera_to_world);

}  // namespace recam
