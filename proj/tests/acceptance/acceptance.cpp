// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and a
// metrics table. Exits 0 once every criterion has been evaluated; pass
// --strict to exit 1 when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "recam/container.hpp"
#include "recam/evalkit.hpp"
#include "recam/flow.hpp"
#include "recam/pipeline.hpp"
#include "recam/renderer.hpp"
#include "recam/trainkit.hpp"

namespace fs = std::filesystem;
using namespace recam;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
    double seconds = 0.0;
};

std::map<int, Outcome> outcomes;
std::vector<std::string> notes;

void log(const std::string& msg) { fmt::print(stderr, "[acceptance] {}\n", msg); }

template <typename Fn>
void criterion(int id, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.pass = false;
        o.summary = std::string("exception: ") + e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log(fmt::format("criterion {} {} ({:.1f} s): {}", id, o.pass ? "PASS" : "FAIL", o.seconds, o.summary));
    outcomes[id] = o;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RECAM_BIN) + " -q --threads 1 " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

Outcome flow_exactness() {
    const Matrix<float> x0 = draw_noise(96, 48, 1);
    const Matrix<float> x1 = draw_noise(96, 48, 2) * 0.7f;
    bool ok = interpolate(x0, x1, 0.0f) == x0 && interpolate(x0, x1, 1.0f) == x1;
    const Matrix<float> v = target_velocity(x0, x1);
    double worst = 0.0;
    for (int steps : {1, 4, 32}) {
        const Matrix<float> out = integrate_euler([&](const Matrix<float>&, float) { return v; }, x0, steps);
        worst = std::max(worst, static_cast<double>((out - x1).norm() / x1.norm()));
    }
    ok = ok && worst <= 1e-5;
    return {ok, fmt::format("endpoints exact, worst Euler relative error {:.2e} over steps 1/4/32", worst)};
}

Outcome gradient_correctness() {
    double worst = 0.0;
    std::size_t min_checked = SIZE_MAX;
    std::size_t groups = 0;
    for (const auto& config : {test::micro_config(1), test::micro_config(2), test::micro_config(1, true)}) {
        const auto r = test::gradient_check(config, 17);
        for (const auto& [name, g] : r.groups) {
            worst = std::max(worst, g.max_rel_error);
            min_checked = std::min(min_checked, g.checked);
            ++groups;
        }
    }
    return {worst <= 1e-4,
            fmt::format("{} group checks (stage 1, stage 2, repair), 100 sampled scalars per group or the whole group "
                        "when smaller (smallest {}), max rel error {:.2e}",
                        groups, min_checked, worst)};
}

std::pair<double, double> centroid(const VideoClip& clip) {
    double sx = 0, sy = 0, w = 0;
    for (int y = 0; y < clip.height(); ++y) {
        for (int x = 0; x < clip.width(); ++x) {
            const double v = clip.at(0, 0, y, x);
            sx += v * x;
            sy += v * y;
            w += v;
        }
    }
    return {sx / w, sy / w};
}

Outcome renderer_geometry() {
    Intrinsics k = Intrinsics::centered(256, 64);
    k.fx = k.fy = 40.0;
    double worst = 0.0;
    for (double z : {5.0, 10.0, 20.0}) {
        GaussianScene scene;
        scene.background = Vec3::Zero();
        Splat s;
        s.center = Vec3(0.0, 0.0, z);
        s.scale = Vec3::Constant(0.02);
        s.color = Vec3(1, 1, 1);
        scene.splats.push_back(s);
        scene.bounds = {Vec3::Constant(-100), Vec3::Constant(100)};
        Trajectory still;
        still.poses.push_back(Pose::identity());
        const double u0 = centroid(render_clip(scene, still, k)).first;
        for (double delta : {1.0, 2.0, 3.0, 4.0}) {
            const double u = centroid(render_clip(scene, lateral_offset_trajectory(still, delta), k)).first;
            worst = std::max(worst, std::abs((u - u0) - (-k.fx * delta / z)));
        }
    }
    return {worst <= 0.5, fmt::format("max deviation from -fx*delta/z: {:.3f} px (12 cases)", worst)};
}

// ---------------------------------------------------------------------------

PipelineConfig sweep_config(std::uint64_t seed, const fs::path& root) {
    PipelineConfig c;
    ModelConfig& m = c.train.model;
    m.frames = 8;
    m.height = 16;
    m.width = 24;
    m.patch = 4;
    m.d_model = 64;
    m.heads = 2;
    m.depth = 2;
    m.time_dim = 32;
    m.ffn_mult = 2;
    m.cam_hidden = 32;
    c.train.steps = 2000;
    c.train.batch = 4;
    c.train.lr = 3e-3;
    c.train.seed = seed;
    c.data.seed = seed;
    c.data.scenes = 16;
    c.data.levels = {1, 2, 3};
    c.eval.seed = 77;
    c.eval.scenes = 5;
    c.eval.offsets = {-3.0, -2.0, -1.0, 1.0, 2.0, 3.0};
    c.eval.sample_steps = 16;
    c.work_dir = root / fmt::format("seed_{}", seed);
    return c;
}

struct SweepArms {
    std::map<std::string, std::vector<EvalRow>> rows;  ///< pooled over seeds
    std::map<std::string, std::vector<double>> seed_psnr;
    std::map<std::string, std::vector<double>> seed_terr;
    fs::path first_stage1;
    PipelineConfig first_config;
    bool done = false;
};

SweepArms run_sweep(const fs::path& root) {
    SweepArms s;
    const std::pair<Ablation, std::vector<std::string>> plan[] = {
        {Ablation::PoseOnly, {"full", "pose-only"}},
        {Ablation::OneStage, {"two-stage", "one-stage"}},
        {Ablation::Longitudinal, {"lateral", "longitudinal"}},
        {Ablation::CleanVsDegradedSource, {"clean-source", "degraded-source"}},
    };
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const PipelineConfig config = sweep_config(seed, root);
        if (seed == 1) s.first_config = config;
        for (const auto& [ablation, names] : plan) {
            const AblationResult r = run_ablation(ablation, config, [&](const std::string& m) {
                log(fmt::format("seed {} {}", seed, m));
            });
            for (const auto& arm : r.arms) {
                const std::string key = std::string(to_string(ablation)) + "/" + arm.name;
                auto& pooled = s.rows[key];
                pooled.insert(pooled.end(), arm.report.rows.begin(), arm.report.rows.end());
                std::vector<double> p, t;
                for (const auto& row : arm.report.rows) {
                    p.push_back(row.psnr_db);
                    t.push_back(row.terr_m);
                }
                s.seed_psnr[key].push_back(median(p));
                s.seed_terr[key].push_back(median(t));
                if (seed == 1 && ablation == Ablation::PoseOnly && arm.name == "pose-only") s.first_stage1 = arm.checkpoint;
            }
        }
    }
    s.done = true;
    return s;
}

double pooled_median(const SweepArms& s, const std::string& key, double EvalRow::*field) {
    std::vector<double> v;
    for (const auto& r : s.rows.at(key)) v.push_back(r.*field);
    return median(v);
}

std::string per_seed(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += fmt::format("{}{:.3f}", out.empty() ? "" : "/", x);
    return out;
}

Outcome trend(const SweepArms& s, const std::string& ref, const std::string& abl, bool psnr_strict, bool need_psnr,
              bool need_terr) {
    const double pr = pooled_median(s, ref, &EvalRow::psnr_db), pa = pooled_median(s, abl, &EvalRow::psnr_db);
    const double tr = pooled_median(s, ref, &EvalRow::terr_m), ta = pooled_median(s, abl, &EvalRow::terr_m);
    bool ok = true;
    if (need_psnr) ok = ok && (psnr_strict ? pr > pa : pr >= pa);
    if (need_terr) ok = ok && tr < ta;
    return {ok, fmt::format("{}: psnr {:.3f} dB terr {:.3f} m | {}: psnr {:.3f} dB terr {:.3f} m | per-seed psnr {} vs {}, "
                            "terr {} vs {}",
                            ref, pr, tr, abl, pa, ta, per_seed(s.seed_psnr.at(ref)), per_seed(s.seed_psnr.at(abl)),
                            per_seed(s.seed_terr.at(ref)), per_seed(s.seed_terr.at(abl)))};
}

Outcome freezing_contract(const SweepArms& s, const fs::path& root) {
    const PipelineConfig& pc = s.first_config;
    const fs::path data = ensure_dataset(pc, CurationMode::Lateral);
    TrainConfig t = pc.train;
    t.stage = 2;
    t.steps = 200;
    t.data = data;
    t.init = s.first_stage1;
    const Dataset dataset = read_dataset(data);
    const TrainResult r = train_stage(t, dataset);
    const Checkpoint init = load_checkpoint(s.first_stage1);
    std::size_t identical = 0;
    for (const auto& p : init.model.params().all()) {
        if (r.checkpoint.model.params().get(p.name).value == p.value) ++identical;
    }
    save_checkpoint(root / "freeze_s2.ckpt", r.checkpoint);
    DiffusionTransformer<float> stage1 = init.model;
    const double l1 = batch_loss(stage1, dataset, draw_batch(t.seed, 2, 0, t.batch, dataset.triples.size()), false);
    const double l2 = r.log.front().loss;
    const bool ok = identical == init.model.params().size() && std::abs(l1 - l2) <= 1e-5;
    return {ok, fmt::format("{}/{} stage-1 tensors bit-identical after {} steps; first-batch loss {:.8f} vs stage-1 "
                            "{:.8f} (|diff| {:.1e})",
                            identical, init.model.params().size(), r.log.size(), l2, l1, std::abs(l1 - l2))};
}

Outcome determinism_io(const fs::path& root) {
    const fs::path d = root / "determinism";
    fs::remove_all(d);
    fs::create_directories(d);
    const std::string model = " --patch 4 --d-model 32 --heads 2 --depth 1 --time-dim 16 --ffn-mult 2 --cam-hidden 16";
    const std::string data = " --scenes 2 --levels 1,2 --seed 7 --width 24 --height 16";
    std::vector<std::string> problems;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond) problems.push_back(what);
    };
    for (const char* tag : {"a", "b"}) {
        const std::string p = (d / tag).string();
        expect(run_cli("gen-data" + data + " --out " + p + ".pdt") == 0, "gen-data failed");
        const std::string train = " --data " + p + ".pdt --steps 20 --seed 1" + model;
        expect(run_cli("train --stage 1" + train + " --out " + p + "_s1.ckpt") == 0, "train stage 1 failed");
        expect(run_cli("train --stage 2 --init " + p + "_s1.ckpt" + train + " --out " + p + "_s2.ckpt") == 0,
               "train stage 2 failed");
        expect(run_cli("eval --ckpt " + p + "_s2.ckpt --scenes-held-out 2 --sample-steps 4 --seed 3 --report " + p +
                       "_report.csv") == 0,
               "eval failed");
    }
    for (const char* suffix : {".pdt", "_s1.ckpt", "_s1.loss.csv", "_s2.ckpt", "_s2.loss.csv", "_report.csv"}) {
        const std::string a = slurp(d / (std::string("a") + suffix)), b = slurp(d / (std::string("b") + suffix));
        expect(!a.empty() && a == b, std::string("rerun differs: ") + suffix);
    }
    const ContainerContents c = read_container(d / "a.pdt");
    write_container(d / "copy.pdt", c.tensors, c.manifest);
    expect(slurp(d / "copy.pdt") == slurp(d / "a.pdt"), "container round trip differs");
    save_checkpoint(d / "copy.ckpt", load_checkpoint(d / "a_s2.ckpt"));
    expect(slurp(d / "copy.ckpt") == slurp(d / "a_s2.ckpt"), "checkpoint round trip differs");
    std::string summary = problems.empty() ? "gen-data/train/eval reruns byte-identical; container and checkpoint "
                                             "round trips lossless"
                                           : problems.front();
    return {problems.empty(), summary};
}

Outcome oracle_self_test(const fs::path&) {
    const EvalConfig eval = eval_config_for(sweep_config(1, ".").train.model, sweep_config(1, ".").eval);
    OracleGenerator oracle;
    const EvalReport r = run_eval(oracle, eval);
    std::size_t good = 0;
    for (const auto& row : r.rows) good += row.terr_m == 0.0 && row.psnr_db == kPsnrCapDb;
    return {good == r.rows.size() && !r.rows.empty(),
            fmt::format("{}/{} rows with terr 0 and psnr {} dB", good, r.rows.size(), kPsnrCapDb)};
}

}  // namespace

int main(int argc, char** argv) {
    bool strict = false;
    fs::path root = fs::current_path() / "acceptance_work";
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--strict") strict = true;
        else if (arg == "--work-dir" && i + 1 < argc) root = argv[++i];
        else {
            fmt::print(stderr, "usage: {} [--strict] [--work-dir DIR]\n", argv[0]);
            return 2;
        }
    }
    fs::remove_all(root);
    fs::create_directories(root);

    criterion(1, flow_exactness);
    criterion(2, gradient_correctness);
    criterion(4, renderer_geometry);
    criterion(10, [&] { return oracle_self_test(root); });
    criterion(9, [&] { return determinism_io(root); });

    SweepArms sweep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        sweep = run_sweep(root);
    } catch (const std::exception& e) {
        notes.push_back(std::string("sweep failed: ") + e.what());
    }
    const double sweep_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto sweep_criterion = [&](int id, auto fn) {
        if (!sweep.done) {
            outcomes[id] = {false, "ablation sweep did not complete", 0.0};
            return;
        }
        criterion(id, fn);
    };
    sweep_criterion(3, [&] { return freezing_contract(sweep, root); });
    sweep_criterion(5, [&] { return trend(sweep, "pose-only/full", "pose-only/pose-only", true, true, true); });
    sweep_criterion(6, [&] { return trend(sweep, "one-stage/two-stage", "one-stage/one-stage", false, true, false); });
    sweep_criterion(7, [&] { return trend(sweep, "longitudinal/lateral", "longitudinal/longitudinal", false, false, true); });
    sweep_criterion(8, [&] {
        return trend(sweep, "clean-vs-degraded-source/clean-source", "clean-vs-degraded-source/degraded-source", false,
                     true, false);
    });

    const char* titles[] = {"",
                            "flow-matching exactness",
                            "gradient correctness",
                            "freezing contract",
                            "renderer geometry",
                            "pose vs pose + rendering (median terr lower, median PSNR higher)",
                            "two-stage vs one-stage (median PSNR >=)",
                            "lateral vs longitudinal curation (median terr lower)",
                            "clean vs degraded source (median PSNR >=)",
                            "determinism and IO",
                            "eval-harness self-test"};
    std::string report = fmt::format("ablation sweep: 3 seeds, {:.0f} s\n", sweep_s);
    for (const auto& n : notes) report += fmt::format("note: {}\n", n);
    int failures = 0;
    for (int id = 1; id <= 10; ++id) {
        const Outcome& o = outcomes[id];
        failures += !o.pass;
        report += fmt::format("{} criterion {:>2}: {} -- {}\n", o.pass ? "PASS" : "FAIL", id, titles[id], o.summary);
    }
    report += fmt::format("{} of 10 criteria passed\n", 10 - failures);
    fmt::print("{}", report);
    // ctest hides the output of passing tests
    std::ofstream(root / "results.txt") << report;
    return strict && failures ? 1 : 0;
}
