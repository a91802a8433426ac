// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/evalkit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "recam/container.hpp"
#include "recam/error.hpp"
#include "recam/flow.hpp"
#include "recam/trainkit.hpp"

namespace recam {

double psnr_from_mse(double mse) {
    if (mse < 1e-10) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

double psnr(const VideoClip& a, const VideoClip& b) {
    if (!a.same_shape(b)) fail(ErrorKind::InvalidParams, "psnr: clip shapes differ");
    return psnr_from_mse(clip_mse(a, b));
}

std::vector<double> offset_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) fail(ErrorKind::InvalidParams, "offset grid needs step > 0 and hi >= lo");
    std::vector<double> grid;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 0.5));
    for (long i = 0; i <= n; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    return grid;
}

VideoClip render_offset(const GaussianScene& scene, const Trajectory& recorded, const Intrinsics& k, double delta,
                        const RenderOptions& options) {
    const Trajectory base = quantize_to_float(recorded);
    return render_clip(scene, quantize_to_float(lateral_offset_trajectory(base, delta)), k, options);
}

const VideoClip& OffsetRenderCache::get(const GaussianScene& scene, const Trajectory& recorded, const Intrinsics& k,
                                        double delta, const RenderOptions& options) {
    auto it = renders_.find(delta);
    if (it == renders_.end()) it = renders_.emplace(delta, render_offset(scene, recorded, k, delta, options)).first;
    return it->second;
}

double estimate_offset(const VideoClip& generated, const GaussianScene& scene, const Trajectory& recorded,
                       const Intrinsics& k, const std::vector<double>& grid, OffsetRenderCache* cache,
                       const RenderOptions& options) {
    if (grid.empty()) fail(ErrorKind::InvalidParams, "estimate_offset: empty grid");
    OffsetRenderCache local;
    OffsetRenderCache& renders = cache ? *cache : local;
    double best = grid.front();
    double best_mse = std::numeric_limits<double>::infinity();
    for (double g : grid) {
        const double mse = clip_mse(generated, renders.get(scene, recorded, k, g, options));
        if (mse < best_mse || (mse == best_mse && std::abs(g) < std::abs(best))) {
            best = g;
            best_mse = mse;
        }
    }
    return best;
}

double temporal_consistency(const VideoClip& clip) {
    const int frames = clip.frames();
    if (frames < 2) fail(ErrorKind::InvalidParams, "temporal_consistency needs at least 2 frames");
    const auto data = clip.data();
    double mean = 0.0;
    for (float v : data) mean += v;
    mean /= static_cast<double>(data.size());
    const std::size_t per_frame = data.size() / static_cast<std::size_t>(frames);

    double total = 0.0;
    for (int f = 0; f + 1 < frames; ++f) {
        const float* a = data.data() + static_cast<std::size_t>(f) * per_frame;
        const float* b = a + per_frame;
        double ab = 0.0, aa = 0.0, bb = 0.0;
        bool identical = true;
        for (std::size_t i = 0; i < per_frame; ++i) {
            const double x = a[i] - mean, y = b[i] - mean;
            ab += x * y;
            aa += x * x;
            bb += y * y;
            identical = identical && a[i] == b[i];
        }
        double score;
        if (aa <= 0.0 || bb <= 0.0) {
            score = identical ? 1.0 : 0.0;
        } else {
            score = 0.5 * (ab / std::sqrt(aa * bb) + 1.0);
        }
        total += std::clamp(score, 0.0, 1.0);
    }
    return total / (frames - 1);
}

// ---------------------------------------------------------------------------

std::string EvalConfig::canonical() const {
    std::ostringstream os;
    os << "seed=" << seed << ";scenes=" << scenes << ";offsets=";
    for (double o : offsets) os << fmt::format("{:g},", o);
    os << ";grid=";
    for (double g : grid) os << fmt::format("{:g},", g);
    os << fmt::format(";steps={};cond={};src={}", sample_steps, condition_level, source_level);
    os << fmt::format(";splats={};cw={:g};cl={:g};od={:g};F={};speed={:g};curv={:g};ch={:g};wh={:g};mo={:g}",
                      scene.splat_count, scene.corridor_width, scene.corridor_length, scene.object_density,
                      scene.trajectory_length, scene.speed, scene.curvature, scene.camera_height, scene.wall_height,
                      scene.max_offset);
    os << fmt::format(";K={:g},{:g},{:g},{:g},{},{}", intrinsics.fx, intrinsics.fy, intrinsics.cx, intrinsics.cy,
                      intrinsics.width, intrinsics.height);
    return os.str();
}

std::uint64_t EvalConfig::hash() const { return fnv1a64(canonical()); }

EvalConfig eval_config_for(const ModelConfig& model, EvalConfig base) {
    base.scene.trajectory_length = model.frames;
    if (base.intrinsics.width != model.width || base.intrinsics.height != model.height) {
        base.intrinsics = Intrinsics::centered(model.width, model.height);
    }
    return base;
}

std::vector<std::uint64_t> eval_scene_seeds(std::uint64_t seed, int count) {
    constexpr std::uint64_t span = 90000;
    if (count < 0 || static_cast<std::uint64_t>(count) > span) fail(ErrorKind::InvalidParams, "bad eval scene count");
    std::vector<std::uint64_t> seeds;
    std::set<std::uint64_t> used;
    for (int i = 0; i < count; ++i) {
        std::uint64_t c = derive_seed(seed, {0xe7a1, static_cast<std::uint64_t>(i)}) % span;
        while (used.count(c)) c = (c + 1) % span;
        used.insert(c);
        seeds.push_back(kHeldOutSeedBase + c);
    }
    return seeds;
}

EvalScene make_eval_scene(std::uint64_t scene_seed, const EvalConfig& config) {
    if (scene_seed < kHeldOutSeedBase) {
        fail(ErrorKind::InvalidParams, fmt::format("scene seed {} is reserved for training", scene_seed));
    }
    return EvalScene{scene_seed, generate_scene(scene_seed, config.scene), generate_trajectory(scene_seed, config.scene)};
}

EvalCase make_eval_case(const EvalScene& scene, double delta, const EvalConfig& config) {
    CurationOptions options;
    options.render = config.render;
    EvalCase c;
    c.scene = &scene;
    c.delta = delta;
    const std::uint64_t case_seed = derive_seed(config.seed, {scene.seed, std::bit_cast<std::uint64_t>(delta)});
    c.pair = build_inference_pair(scene.scene, scene.recorded, config.intrinsics, delta, case_seed, options,
                                  config.condition_level);
    if (config.source_level > 0) {
        const GaussianScene degraded =
            degrade_scene(scene.scene, fidelity_level(config.source_level), derive_seed(case_seed, {0x5c}));
        c.pair.source = render_clip(degraded, c.pair.source_traj, config.intrinsics, config.render);
    }
    c.ground_truth = render_clip(scene.scene, c.pair.target_traj, config.intrinsics, config.render);
    c.sample_seed = derive_seed(case_seed, {0x5a});
    return c;
}

VideoClip ModelGenerator::generate(const EvalCase& c) {
    const ModelConfig& mc = model_.config();
    Conditioning<float> cond;
    cond.render = encode_latent<float>(c.pair.condition, mc.patch);
    if (!mc.repair) {
        cond.source = encode_latent<float>(c.pair.source, mc.patch);
        cond.rel_poses = c.pair.rel_poses;
    }
    return sample(model_, cond, steps_, c.sample_seed);
}

// ---------------------------------------------------------------------------

double median(std::vector<double> values) {
    if (values.empty()) fail(ErrorKind::InvalidParams, "median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::map<double, EvalAggregate> aggregate_rows(const std::vector<EvalRow>& rows) {
    std::map<double, EvalAggregate> out;
    for (const auto& r : rows) {
        auto& a = out[r.delta];
        a.count += 1;
        a.psnr_db += r.psnr_db;
        a.mse += r.mse;
        a.terr_m += r.terr_m;
        a.tconsist += r.tconsist;
    }
    for (auto& [delta, a] : out) {
        const double n = static_cast<double>(a.count);
        a.psnr_db /= n;
        a.mse /= n;
        a.terr_m /= n;
        a.tconsist /= n;
    }
    return out;
}

std::string EvalReport::to_csv() const {
    std::string out = "scene_seed,delta,psnr_db,mse,terr_m,tconsist\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:g},{:.9g},{:.9g},{:.9g},{:.9g}\n", r.scene_seed, r.delta, r.psnr_db, r.mse, r.terr_m,
                           r.tconsist);
    }
    return out;
}

std::string EvalReport::summary_csv() const {
    std::string out = fmt::format("# config_hash={}\n# checkpoint_hash={}\n", hex64(config_hash), hex64(checkpoint_hash));
    out += "delta,count,psnr_db,mse,terr_m,tconsist\n";
    for (const auto& [delta, a] : per_delta) {
        out += fmt::format("{:g},{},{:.9g},{:.9g},{:.9g},{:.9g}\n", delta, a.count, a.psnr_db, a.mse, a.terr_m,
                           a.tconsist);
    }
    return out;
}

EvalReport run_eval(Generator& generator, const EvalConfig& config, const CaseCallback& on_case) {
    if (config.offsets.empty() || config.scenes < 1) fail(ErrorKind::InvalidParams, "eval needs scenes and offsets");
    EvalReport report;
    report.config_hash = config.hash();
    for (std::uint64_t scene_seed : eval_scene_seeds(config.seed, config.scenes)) {
        const EvalScene scene = make_eval_scene(scene_seed, config);
        OffsetRenderCache cache;
        for (double delta : config.offsets) {
            const EvalCase c = make_eval_case(scene, delta, config);
            const VideoClip generated = generator.generate(c);
            EvalRow row;
            row.scene_seed = scene_seed;
            row.delta = delta;
            row.mse = clip_mse(generated, c.ground_truth);
            row.psnr_db = psnr_from_mse(row.mse);
            const double estimate = estimate_offset(generated, scene.scene, scene.recorded, config.intrinsics,
                                                    config.grid, &cache, config.render);
            row.terr_m = std::abs(estimate - delta);
            row.tconsist = temporal_consistency(generated);
            report.rows.push_back(row);
            if (on_case) on_case(c, generated, row);
        }
    }
    report.per_delta = aggregate_rows(report.rows);
    return report;
}

EvalReport run_eval(const std::filesystem::path& checkpoint, const EvalConfig& config, const CaseCallback& on_case) {
    if (!std::filesystem::exists(checkpoint)) fail(ErrorKind::Io, "missing checkpoint " + checkpoint.string());
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    const ModelConfig& mc = ckpt.model.config();
    if (config.scene.trajectory_length != mc.frames || config.intrinsics.width != mc.width ||
        config.intrinsics.height != mc.height) {
        fail(ErrorKind::Config, fmt::format("eval clips are {}x{}x{}, checkpoint expects {}x{}x{}",
                                            config.scene.trajectory_length, config.intrinsics.height,
                                            config.intrinsics.width, mc.frames, mc.height, mc.width));
    }
    ModelGenerator generator(ckpt.model, config.sample_steps);
    EvalReport report = run_eval(generator, config, on_case);
    const auto bytes = read_file_bytes(checkpoint);
    report.checkpoint_hash =
        fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    return report;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::Io, "cannot open " + path.string());
    os << text;
    if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace recam
