// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "recam/container.hpp"
#include "recam/geometry.hpp"
#include "recam/renderer.hpp"
#include "recam/scene.hpp"
#include "recam/video.hpp"

namespace recam {

/// Lateral offsets used when curating training data, meters.
inline const std::vector<double> kCurationOffsets = {-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0};

enum class CurationMode { Lateral, Longitudinal };

const char* to_string(CurationMode mode);
CurationMode parse_curation_mode(const std::string& text);

/// One supervised example. In lateral mode the source is the converged
/// render of the shifted trajectory, the condition a degraded render of the
/// recorded trajectory and the target its clean render.
struct TrainingTriple {
    VideoClip source;
    VideoClip condition;
    VideoClip target;
    std::vector<Pose> rel_poses;  ///< per frame, source camera -> target camera
    Trajectory source_traj;
    Trajectory target_traj;
    double offset = 0.0;  ///< lateral shift, or forward distance in longitudinal mode
    int condition_level = 1;
    std::uint64_t scene_seed = 0;
};

struct InferencePair {
    VideoClip source;     ///< clean recorded-trajectory render
    VideoClip condition;  ///< mildly degraded render of the shifted trajectory
    std::vector<Pose> rel_poses;  ///< recorded camera -> shifted camera
    Trajectory source_traj;
    Trajectory target_traj;
};

struct CurationOptions {
    std::vector<double> allowed_offsets = kCurationOffsets;
    bool allow_zero_offset = false;  ///< debug only
    double side_margin = 1.0;        ///< minimum distance kept from the corridor walls, meters
    RenderOptions render;
};

/// Throws ErrorKind::Curation for unsupported offsets, level 0 conditions or
/// shifted trajectories leaving the scene.
TrainingTriple build_training_triple(const GaussianScene& scene, const Trajectory& recorded, const Intrinsics& k,
                                     double delta, int level, std::uint64_t seed,
                                     const CurationOptions& options = {});

/// Front-segment source, rear-segment target taken from one longer drive.
TrainingTriple build_longitudinal_triple(const GaussianScene& scene, const Trajectory& drive, const Intrinsics& k,
                                         int frames, int shift_frames, int level, std::uint64_t seed,
                                         const CurationOptions& options = {});

/// Roles flipped relative to training: the recorded trajectory is the source
/// and the shifted one the target. `condition_level` defaults to the mild
/// level 1 degrade standing in for extrapolation artifacts.
InferencePair build_inference_pair(const GaussianScene& scene, const Trajectory& recorded, const Intrinsics& k,
                                   double delta, std::uint64_t seed, const CurationOptions& options = {},
                                   int condition_level = 1);

struct DatasetConfig {
    std::uint64_t seed = 0;
    int scenes = 4;
    std::vector<double> offsets = kCurationOffsets;
    std::vector<int> levels = {1, 2, 3};
    CurationMode mode = CurationMode::Lateral;
    SceneParams scene;
    Intrinsics intrinsics = Intrinsics::centered(48, 32);
    bool overwrite = false;
    int threads = 1;

    std::string canonical() const;
    std::uint64_t hash() const;
};

struct TripleDescriptor {
    std::size_t index = 0;
    std::uint64_t scene_seed = 0;
    double delta = 0.0;
    int level = 0;
    std::uint64_t offset_bytes = 0;
    int frames = 0;
    int height = 0;
    int width = 0;

    bool operator==(const TripleDescriptor&) const = default;
};

struct DatasetManifest {
    std::uint64_t config_hash = 0;
    CurationMode mode = CurationMode::Lateral;
    std::vector<TripleDescriptor> descriptors;
    std::map<double, std::size_t> counts_per_offset;

    std::string to_text() const;
    static DatasetManifest parse(const std::string& text);
};

inline constexpr std::size_t kTensorsPerTriple = 6;

/// Scene seeds for training: derived from the dataset seed, distinct, and
/// always below kHeldOutSeedBase.
std::vector<std::uint64_t> training_scene_seeds(std::uint64_t seed, int count);
inline constexpr std::uint64_t kHeldOutSeedBase = 10000;

/// Scene parameters for a dataset: longitudinal drives are twice as long so
/// both segments fit.
SceneParams dataset_scene_params(const DatasetConfig& config);

/// Builds every (scene, offset, level) triple and streams it to `path`.
/// Refuses to replace an existing file unless config.overwrite is set.
DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& path);

struct Dataset {
    DatasetManifest manifest;
    std::vector<TrainingTriple> triples;
};

Dataset read_dataset(const std::filesystem::path& path);

/// Triple tensor layout: source, condition, target (F×3×H×W), rel_poses,
/// source_traj, target_traj (F×3×4).
std::vector<Tensor> triple_tensors(const TrainingTriple& triple);

}  // namespace recam
