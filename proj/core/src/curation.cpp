// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/curation.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <set>
#include <sstream>

#include "recam/container.hpp"
#include "recam/error.hpp"
#include "recam/rng.hpp"

namespace recam {
namespace {

void check_inside(const GaussianScene& scene, const Trajectory& traj, double margin, double delta) {
    const double limit_x = scene.bounds.hi.x() - 0.5 - margin;
    const double limit_nx = scene.bounds.lo.x() + 0.5 + margin;
    for (const auto& p : traj.poses) {
        const Vec3& t = p.translation;
        if (!scene.bounds.contains(t) || t.x() > limit_x || t.x() < limit_nx) {
            fail(ErrorKind::Curation,
                 fmt::format("trajectory shifted by {:+g} m leaves the scene at ({:.3f}, {:.3f}, {:.3f})", delta,
                             t.x(), t.y(), t.z()));
        }
    }
}

void check_level(int level) {
    if (level < 1 || level > 3) {
        fail(ErrorKind::Curation, fmt::format("condition level must be 1..3, got {}", level));
    }
}

void check_offset(double delta, const CurationOptions& options) {
    if (delta == 0.0) {
        if (!options.allow_zero_offset) fail(ErrorKind::Curation, "zero offset is only allowed in debug mode");
        return;
    }
    const bool supported = std::any_of(options.allowed_offsets.begin(), options.allowed_offsets.end(),
                                       [&](double o) { return o == delta; });
    if (!supported) fail(ErrorKind::Curation, fmt::format("offset {:+g} m is not in the supported set", delta));
}

Tensor poses_tensor(const std::vector<Pose>& poses) {
    std::vector<float> values;
    values.reserve(poses.size() * 12);
    for (const auto& p : poses) {
        for (double v : p.flatten()) values.push_back(static_cast<float>(v));
    }
    return Tensor::from_f32(values, {poses.size(), 3, 4});
}

std::vector<Pose> poses_from_tensor(const Tensor& t) {
    if (t.dims.size() != 3 || t.dims[1] != 3 || t.dims[2] != 4) {
        fail(ErrorKind::CorruptContainer, "pose tensor must be F×3×4");
    }
    const auto values = t.to_f32();
    std::vector<Pose> out;
    for (std::size_t f = 0; f < t.dims[0]; ++f) {
        std::array<double, 12> a{};
        for (int i = 0; i < 12; ++i) a[i] = values[f * 12 + i];
        out.push_back(Pose::unflatten(a));
    }
    return out;
}

Tensor clip_tensor(const VideoClip& clip) {
    return Tensor::from_f32(clip.data(), {static_cast<std::uint64_t>(clip.frames()), 3,
                                          static_cast<std::uint64_t>(clip.height()),
                                          static_cast<std::uint64_t>(clip.width())});
}

VideoClip clip_from_tensor(const Tensor& t) {
    if (t.dims.size() != 4 || t.dims[1] != 3) fail(ErrorKind::CorruptContainer, "clip tensor must be F×3×H×W");
    VideoClip clip(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[2]), static_cast<int>(t.dims[3]));
    const auto values = t.to_f32();
    std::copy(values.begin(), values.end(), clip.data().begin());
    return clip;
}

std::string format_number(double v) { return fmt::format("{:g}", v); }

}  // namespace

const char* to_string(CurationMode mode) {
    return mode == CurationMode::Lateral ? "lateral" : "longitudinal";
}

CurationMode parse_curation_mode(const std::string& text) {
    if (text == "lateral") return CurationMode::Lateral;
    if (text == "longitudinal") return CurationMode::Longitudinal;
    fail(ErrorKind::Config, "unknown curation mode '" + text + "'");
}

TrainingTriple build_training_triple(const GaussianScene& scene, const Trajectory& recorded, const Intrinsics& k,
                                     double delta, int level, std::uint64_t seed, const CurationOptions& options) {
    check_offset(delta, options);
    check_level(level);
    const Trajectory target_traj = quantize_to_float(recorded);
    const Trajectory source_traj = quantize_to_float(lateral_offset_trajectory(target_traj, delta));
    check_inside(scene, source_traj, options.side_margin, delta);

    TrainingTriple t;
    t.source = render_clip(scene, source_traj, k, options.render);
    t.condition = render_clip(degrade_scene(scene, fidelity_level(level), derive_seed(seed, {0xc0d})), target_traj,
                              k, options.render);
    t.target = render_clip(scene, target_traj, k, options.render);
    t.rel_poses = relative_poses(source_traj, target_traj);
    t.source_traj = source_traj;
    t.target_traj = target_traj;
    t.offset = delta;
    t.condition_level = level;
    t.scene_seed = scene.seed;
    return t;
}

TrainingTriple build_longitudinal_triple(const GaussianScene& scene, const Trajectory& drive, const Intrinsics& k,
                                         int frames, int shift_frames, int level, std::uint64_t seed,
                                         const CurationOptions& options) {
    check_level(level);
    if (shift_frames < 1 || static_cast<std::size_t>(shift_frames + frames) > drive.size()) {
        fail(ErrorKind::Curation,
             fmt::format("drive of {} frames cannot hold segments of {} shifted by {}", drive.size(), frames,
                         shift_frames));
    }
    const Trajectory q = quantize_to_float(drive);
    const Trajectory source_traj = slice_trajectory(q, 0, static_cast<std::size_t>(frames));
    const Trajectory target_traj = slice_trajectory(q, static_cast<std::size_t>(shift_frames),
                                                    static_cast<std::size_t>(frames));
    check_inside(scene, target_traj, options.side_margin, 0.0);

    TrainingTriple t;
    t.source = render_clip(scene, source_traj, k, options.render);
    t.condition = render_clip(degrade_scene(scene, fidelity_level(level), derive_seed(seed, {0xc0d})), target_traj,
                              k, options.render);
    t.target = render_clip(scene, target_traj, k, options.render);
    t.rel_poses = relative_poses(source_traj, target_traj);
    t.source_traj = source_traj;
    t.target_traj = target_traj;
    t.offset = (target_traj.poses[0].translation - source_traj.poses[0].translation).norm();
    t.condition_level = level;
    t.scene_seed = scene.seed;
    return t;
}

InferencePair build_inference_pair(const GaussianScene& scene, const Trajectory& recorded, const Intrinsics& k,
                                   double delta, std::uint64_t seed, const CurationOptions& options,
                                   int condition_level) {
    const Trajectory source_traj = quantize_to_float(recorded);
    const Trajectory target_traj = quantize_to_float(lateral_offset_trajectory(source_traj, delta));
    check_inside(scene, target_traj, options.side_margin, delta);

    InferencePair p;
    p.source = render_clip(scene, source_traj, k, options.render);
    const GaussianScene degraded = degrade_scene(scene, fidelity_level(condition_level), derive_seed(seed, {0x1f}));
    p.condition = render_clip(degraded, target_traj, k, options.render);
    p.rel_poses = relative_poses(source_traj, target_traj);
    p.source_traj = source_traj;
    p.target_traj = target_traj;
    return p;
}

std::string DatasetConfig::canonical() const {
    std::ostringstream os;
    os << "seed=" << seed << ";scenes=" << scenes << ";mode=" << to_string(mode) << ";offsets=";
    for (double o : offsets) os << format_number(o) << ",";
    os << ";levels=";
    for (int l : levels) os << l << ",";
    os << fmt::format(";splats={};cw={:g};cl={:g};od={:g};F={};speed={:g};curv={:g};ch={:g};wh={:g};mo={:g}",
                      scene.splat_count, scene.corridor_width, scene.corridor_length, scene.object_density,
                      scene.trajectory_length, scene.speed, scene.curvature, scene.camera_height, scene.wall_height,
                      scene.max_offset);
    os << fmt::format(";K={:g},{:g},{:g},{:g},{},{}", intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy,
                      intrinsics.width, intrinsics.height);
    return os.str();
}

std::uint64_t DatasetConfig::hash() const { return fnv1a64(canonical()); }

std::string DatasetManifest::to_text() const {
    std::ostringstream os;
    os << "# recam dataset v1\n";
    os << "# config_hash=" << hex64(config_hash) << "\n";
    os << "# mode=" << to_string(mode) << "\n";
    os << "# tensors_per_triple=" << kTensorsPerTriple << "\n";
    for (const auto& [delta, n] : counts_per_offset) os << "# count delta=" << format_number(delta) << " n=" << n << "\n";
    os << "# idx,scene_seed,delta,level,offset_bytes,F,H,W\n";
    for (const auto& d : descriptors) {
        os << d.index << ',' << d.scene_seed << ',' << format_number(d.delta) << ',' << d.level << ','
           << d.offset_bytes << ',' << d.frames << ',' << d.height << ',' << d.width << '\n';
    }
    return os.str();
}

DatasetManifest DatasetManifest::parse(const std::string& text) {
    DatasetManifest m;
    std::istringstream is(text);
    std::string line;
    bool saw_header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# recam dataset v1", 0) == 0) saw_header = true;
            if (line.rfind("# config_hash=", 0) == 0) m.config_hash = std::stoull(line.substr(14), nullptr, 16);
            if (line.rfind("# mode=", 0) == 0) m.mode = parse_curation_mode(line.substr(7));
            continue;
        }
        TripleDescriptor d;
        char c[7];
        std::istringstream ls(line);
        if (!(ls >> d.index >> c[0] >> d.scene_seed >> c[1] >> d.delta >> c[2] >> d.level >> c[3] >> d.offset_bytes >>
              c[4] >> d.frames >> c[5] >> d.height >> c[6] >> d.width)) {
            fail(ErrorKind::CorruptContainer, "malformed manifest line: " + line);
        }
        m.descriptors.push_back(d);
        ++m.counts_per_offset[d.delta];
    }
    if (!saw_header) fail(ErrorKind::CorruptContainer, "manifest is not a dataset manifest");
    return m;
}

std::vector<std::uint64_t> training_scene_seeds(std::uint64_t seed, int count) {
    if (count > static_cast<int>(kHeldOutSeedBase)) fail(ErrorKind::InvalidParams, "too many training scenes");
    std::vector<std::uint64_t> seeds;
    std::set<std::uint64_t> used;
    for (int i = 0; i < count; ++i) {
        std::uint64_t candidate = derive_seed(seed, {0x5eed, static_cast<std::uint64_t>(i)}) % kHeldOutSeedBase;
        while (used.count(candidate)) candidate = (candidate + 1) % kHeldOutSeedBase;
        used.insert(candidate);
        seeds.push_back(candidate);
    }
    return seeds;
}

SceneParams dataset_scene_params(const DatasetConfig& config) {
    SceneParams p = config.scene;
    if (config.mode == CurationMode::Longitudinal) p.trajectory_length = 2 * config.scene.trajectory_length;
    return p;
}

std::vector<Tensor> triple_tensors(const TrainingTriple& t) {
    return {clip_tensor(t.source), clip_tensor(t.condition), clip_tensor(t.target), poses_tensor(t.rel_poses),
            poses_tensor(t.source_traj.poses), poses_tensor(t.target_traj.poses)};
}

DatasetManifest build_dataset(const DatasetConfig& config, const std::filesystem::path& path) {
    if (config.scenes < 1) fail(ErrorKind::InvalidParams, "scene count must be at least 1");
    if (config.offsets.empty() || config.levels.empty()) fail(ErrorKind::InvalidParams, "offsets and levels must be non-empty");
    if (!config.overwrite && std::filesystem::exists(path)) {
        fail(ErrorKind::Io, "output " + path.string() + " already exists");
    }
    const SceneParams params = dataset_scene_params(config);
    const int frames = config.scene.trajectory_length;
    CurationOptions options;
    options.allowed_offsets = config.offsets;
    options.render.threads = config.threads;

    DatasetManifest manifest;
    manifest.config_hash = config.hash();
    manifest.mode = config.mode;

    ContainerWriter writer(path);
    const auto seeds = training_scene_seeds(config.seed, config.scenes);
    for (std::uint64_t scene_seed : seeds) {
        const GaussianScene scene = generate_scene(scene_seed, params);
        const Trajectory drive = generate_trajectory(scene_seed, params);
        for (std::size_t oi = 0; oi < config.offsets.size(); ++oi) {
            for (int level : config.levels) {
                const std::uint64_t triple_seed = derive_seed(config.seed, {scene_seed, oi, static_cast<std::uint64_t>(level)});
                TrainingTriple triple;
                if (config.mode == CurationMode::Lateral) {
                    triple = build_training_triple(scene, drive, config.intrinsics, config.offsets[oi], level,
                                                   triple_seed, options);
                } else {
                    const int slots = static_cast<int>(config.offsets.size());
                    const int shift = std::max(1, static_cast<int>(std::lround(double(oi + 1) * frames / slots)));
                    triple = build_longitudinal_triple(scene, drive, config.intrinsics, frames, shift, level,
                                                       triple_seed, options);
                }
                TripleDescriptor d;
                d.index = manifest.descriptors.size();
                d.scene_seed = scene_seed;
                d.delta = static_cast<double>(static_cast<float>(triple.offset));
                d.level = level;
                d.frames = triple.target.frames();
                d.height = triple.target.height();
                d.width = triple.target.width();
                const auto tensors = triple_tensors(triple);
                d.offset_bytes = writer.add(tensors[0]);
                for (std::size_t i = 1; i < tensors.size(); ++i) writer.add(tensors[i]);
                manifest.descriptors.push_back(d);
                ++manifest.counts_per_offset[d.delta];
            }
        }
    }
    writer.finish(manifest.to_text());
    return manifest;
}

Dataset read_dataset(const std::filesystem::path& path) {
    const ContainerContents contents = read_container(path);
    Dataset ds;
    ds.manifest = DatasetManifest::parse(contents.manifest);
    if (contents.tensors.size() != ds.manifest.descriptors.size() * kTensorsPerTriple) {
        fail(ErrorKind::CorruptContainer, "tensor count does not match manifest descriptors");
    }
    for (std::size_t i = 0; i < ds.manifest.descriptors.size(); ++i) {
        const auto& d = ds.manifest.descriptors[i];
        const std::size_t base = i * kTensorsPerTriple;
        if (contents.offsets[base] != d.offset_bytes) {
            fail(ErrorKind::CorruptContainer, fmt::format("descriptor {} does not resolve to a tensor", i));
        }
        TrainingTriple t;
        t.source = clip_from_tensor(contents.tensors[base]);
        t.condition = clip_from_tensor(contents.tensors[base + 1]);
        t.target = clip_from_tensor(contents.tensors[base + 2]);
        if (t.target.frames() != d.frames || t.target.height() != d.height || t.target.width() != d.width ||
            !t.source.same_shape(t.target) || !t.condition.same_shape(t.target)) {
            fail(ErrorKind::CorruptContainer, fmt::format("descriptor {} dims disagree with stored clips", i));
        }
        t.rel_poses = poses_from_tensor(contents.tensors[base + 3]);
        t.source_traj.poses = poses_from_tensor(contents.tensors[base + 4]);
        t.target_traj.poses = poses_from_tensor(contents.tensors[base + 5]);
        t.offset = d.delta;
        t.condition_level = d.level;
        t.scene_seed = d.scene_seed;
        ds.triples.push_back(std::move(t));
    }
    return ds;
}

}  // namespace recam
