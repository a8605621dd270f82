// Acceptance suite: one PASS/FAIL line per primary criterion; exits 1 on any FAIL.

#include <Eigen/Geometry>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "generators.hpp"
#include "oracles.hpp"
#include "splatfeat/adapter/fusion.hpp"
#include "splatfeat/adapter/gradcheck.hpp"
#include "splatfeat/adapter/trainer.hpp"
#include "splatfeat/dataprep/view_selection.hpp"
#include "splatfeat/dataprep/voxel_prune.hpp"
#include "splatfeat/geo_eval/chamfer.hpp"
#include "splatfeat/geo_eval/image_metrics.hpp"
#include "splatfeat/geo_eval/trajectory.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/synthetic.hpp"
#include "splatfeat/uplift.hpp"

using namespace splatfeat;
namespace t = splatfeat::testing;
using Clock = std::chrono::steady_clock;
using V3 = Eigen::Vector3d;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

Verdict fail(std::string why) { return {false, std::move(why)}; }

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string seed_msg(std::uint64_t seed, const char* what) { return "seed " + std::to_string(seed) + ": " + what; }

Verdict compositing() {
    const auto start = Clock::now();
    std::size_t pixels = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        const auto sc = t::random_scene(rng, 64, 64, 64, 4);
        const auto tiled = rasterize_features<float>(sc.scene, sc.view);
        const auto naive = t::naive_render<float>(sc.scene, sc.view);
        const auto& cm = tiled.contributions;
        for (std::size_t p = 0; p < cm.pixel_count(); ++p, ++pixels) {
            const auto list = cm.pixel(p);
            if (list.size() != naive.pixels[p].size()) return fail(seed_msg(seed, "contributor lists differ from naive"));
            float trans = 1.f;
            double sum = 0;
            for (std::size_t k = 0; k < list.size(); ++k) {
                if (!(list[k] == naive.pixels[p][k])) return fail(seed_msg(seed, "contribution differs from naive"));
                if (list[k].weight != list[k].alpha * trans) return fail(seed_msg(seed, "w != alpha * prod(1 - alpha_j)"));
                trans *= 1.f - list[k].alpha;
                sum += list[k].weight;
            }
            if (sum > 1.0 + 1e-6) return fail(seed_msg(seed, "weights sum above 1"));
        }
        if (tiled.features.data != naive.features.data || cm.accumulated_alpha != naive.accumulated)
            return fail(seed_msg(seed, "tiled render differs bitwise from naive"));
    }
    const double secs = seconds_since(start);
    return {secs < 60.0, "1000 scenes, " + std::to_string(pixels) + " pixels, bitwise equal, " + fmt("%.1f s (< 60 s)", secs)};
}

struct LiftCase {
    GaussianScene scene;
    CameraView view;
    std::vector<FeatureMapD> maps;
    std::vector<ContributionMap> contribs;
};

LiftCase lift_case(std::uint64_t seed, int channels = 6) {
    Rng rng(seed);
    const auto sc = t::random_scene(rng, 48, 32, 24, channels);
    LiftCase lc{sc.scene, sc.view, {}, {rasterize_weights(sc.scene, sc.view)}};
    FeatureMapD f(sc.view.height, sc.view.width, channels);
    for (auto& v : f.data) v = normal01(rng);
    lc.maps.push_back(std::move(f));
    return lc;
}

Verdict lift_contract() {
    double worst_norm = 0, worst_dir = 0, worst_hard = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto lc = lift_case(seed);
        const std::size_t n = lc.scene.size();
        const auto unit = lift<double>(lc.maps, lc.contribs, n);
        for (Eigen::Index i = 0; i < unit.rows(); ++i) {
            const double norm = unit.row(i).norm();
            if (norm != 0.0) worst_norm = std::max(worst_norm, std::abs(norm - 1.0));
        }

        LiftConfig hard_cfg;
        hard_cfg.normalize_output = false;
        hard_cfg.top_k = 1;
        const auto hard = lift<double>(lc.maps, lc.contribs, n, hard_cfg);
        const auto oracle = t::reference_lift(lc.maps, lc.contribs, n, true);
        worst_hard = std::max(worst_hard, (hard - oracle).cwiseAbs().maxCoeff());

        Rng rng(seed + 7777);
        Eigen::VectorXd v(6);
        for (int c = 0; c < 6; ++c) v[c] = normal01(rng);
        for (std::size_t p = 0; p < lc.maps[0].pixel_count(); ++p)
            for (int c = 0; c < 6; ++c) lc.maps[0].pixel(p)[c] = v[c];
        const auto constant = lift<double>(lc.maps, lc.contribs, n);
        for (Eigen::Index i = 0; i < constant.rows(); ++i)
            if (constant.row(i).norm() != 0.0)
                worst_dir = std::max(worst_dir, (constant.row(i).transpose() - v.normalized()).cwiseAbs().maxCoeff());
    }
    const bool ok = worst_norm <= 1e-6 && worst_dir <= 1e-9 && worst_hard <= 1e-12;
    return {ok, "100 instances; max |norm-1| " + fmt("%.1e", worst_norm) + ", constant direction err " +
                    fmt("%.1e", worst_dir) + ", top_k=1 vs hard oracle " + fmt("%.1e", worst_hard)};
}

Verdict round_trip() {
    // Each covered pixel has a single contributor whose alpha is clamped at
    // 0.99, so saturation shows up as accumulated alpha == 0.99f. Every
    // covered pixel is checked; the saturated ones are counted separately.
    double worst = 1;
    std::size_t covered = 0, saturated = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = make_isolated(96, 64, 12, 8, seed);
        for (std::size_t v = 0; v < s.cameras.size(); ++v) {
            const std::vector<ContributionMap> contribs{rasterize_weights(s.scene, s.cameras[v])};
            const std::vector<FeatureMapD> maps{s.feature_maps[v]};
            const auto f = lift<double>(maps, contribs, s.scene.size());
            const auto back = rasterize_features<double>(attach_features(s.scene, f), s.cameras[v]);
            for (std::size_t p = 0; p < back.features.pixel_count(); ++p) {
                if (contribs[0].pixel(p).empty()) continue;
                const Eigen::Map<const Eigen::VectorXd> a(maps[0].pixel(p).data(), 8);
                const Eigen::Map<const Eigen::VectorXd> b(back.features.pixel(p).data(), 8);
                worst = std::min(worst, a.dot(b) / (a.norm() * b.norm()));
                ++covered;
                saturated += contribs[0].accumulated_alpha[p] >= 0.99f;
            }
        }
    }
    return {saturated > 0 && worst >= 0.999,
            std::to_string(covered) + " covered pixels (" + std::to_string(saturated) +
                " at the 0.99 alpha clamp), min cosine " + fmt("%.6f (>= 0.999)", worst)};
}

Verdict adjoint() {
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto lc = lift_case(seed + 500, 4);
        const std::size_t n = lc.scene.size();
        LiftConfig raw;
        raw.normalize_output = false;
        const auto lifted = lift<double>(lc.maps, lc.contribs, n, raw);
        const auto rendered = rasterize_features<double>(attach_features(lc.scene, lifted), lc.view).features;
        Rng rng(seed);
        Eigen::MatrixXd g(static_cast<Eigen::Index>(rendered.pixel_count()), 4);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal01(rng);
        double lhs = 0;
        for (std::size_t p = 0; p < rendered.pixel_count(); ++p)
            for (int c = 0; c < 4; ++c) lhs += rendered.pixel(p)[c] * g(static_cast<Eigen::Index>(p), c);
        // render^T = W^T; lift^T = W D^-1 with D the per-Gaussian weight totals
        const auto w = t::weight_matrix(lc.contribs, n);
        const Eigen::VectorXd colsum = Eigen::RowVectorXd::Ones(w.rows()) * w;
        Eigen::MatrixXd z = w.transpose() * g;
        for (Eigen::Index i = 0; i < z.rows(); ++i)
            z.row(i) = colsum[i] > 0 ? Eigen::RowVectorXd(z.row(i) / colsum[i]) : Eigen::RowVectorXd::Zero(4);
        const Eigen::MatrixXd back = w * z;
        double rhs = 0;
        for (std::size_t p = 0; p < lc.maps[0].pixel_count(); ++p)
            for (int c = 0; c < 4; ++c) rhs += lc.maps[0].pixel(p)[c] * back(static_cast<Eigen::Index>(p), c);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)));
    }
    return {worst <= 1e-6, "50 seeds, max relative gap " + fmt("%.2e (<= 1e-6)", worst)};
}

Verdict gradients() {
    const auto start = Clock::now();
    const auto results = adapter::run_gradcheck(20, 2024);
    const double secs = seconds_since(start);
    double worst = 0;
    std::string ops;
    bool ok = true;
    for (const auto& r : results) {
        worst = std::max(worst, r.max_relative_error);
        ok &= r.trials >= 20 && r.max_relative_error <= 1e-5;
        ops += (ops.empty() ? "" : ",") + r.op;
    }
    ok &= secs < 120.0;
    return {ok, std::to_string(results.size()) + " ops (" + ops + ") x 20 trials, max rel err " + fmt("%.2e", worst) +
                    fmt(", %.1f s (< 120 s)", secs)};
}

Verdict zero_gate() {
    using namespace adapter;
    FusionConfig fc;
    fc.channels = 8;
    fc.refine_blocks = 1;
    fc.heads = 2;
    auto params = FusionParams<double>::random(fc, 3);
    params.gate.out = Affine<double>::zeros(fc.channels, 1);
    std::string sizes;
    for (const auto& [h, w] : {std::pair{4, 4}, std::pair{12, 16}, std::pair{32, 32}}) {
        Rng rng(static_cast<std::uint64_t>(h * 100 + w));
        FeatureMapD f(h, w, 8), g(h, w, 8);
        for (auto& v : f.data) v = normal01(rng);
        for (auto& v : g.data) v = normal01(rng);
        const auto r = adaptive_fuse(f, g, params);
        if (r.fused.data != f.data) return fail(std::to_string(h) + "x" + std::to_string(w) + ": output differs from F");
        const auto rf = adaptive_fuse(f.cast<float>(), g.cast<float>(), params.cast<float>());
        if (rf.fused.data != f.cast<float>().data)
            return fail(std::to_string(h) + "x" + std::to_string(w) + ": float output differs from F");
        sizes += (sizes.empty() ? "" : ", ") + std::to_string(h) + "x" + std::to_string(w);
    }
    return {true, "fused == F bitwise at " + sizes + " (f32 and f64)"};
}

t::Quad scale_objective(const std::vector<V3>& gt, const std::vector<V3>& pred, t::Quad s) {
    t::Quad sum = 0;
    for (std::size_t f = 0; f < gt.size(); ++f)
        for (int a = 0; a < 3; ++a) {
            const t::Quad r = t::Quad(gt[f][a]) - s * t::Quad(pred[f][a]);
            sum += r * r;
        }
    return sum;
}

Verdict scale_alignment() {
    using geo::align_scale;
    const bool ex1 = align_scale(std::vector<V3>{{2, 0, 0}}, std::vector<V3>{{1, 0, 0}}) == 2.0;
    const std::vector<V3> gt2{{1, 0, 0}, {0, 2, 0}}, pred2{{1, 0, 0}, {0, 1, 0}};
    const bool ex2 = align_scale(gt2, pred2) == 1.5;
    const bool ex3 = align_scale(gt2, gt2) == 1.0;
    double worst = 0;
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t frames = 2 + uniform_index(rng, 40);
        const double true_scale = std::exp(uniform(rng, -2.0, 2.0));
        std::vector<V3> pred = t::random_points(rng, frames, 2.0), gt;
        for (const auto& p : pred) gt.push_back(true_scale * p + 0.1 * V3(normal01(rng), normal01(rng), normal01(rng)));
        const double s = align_scale(gt, pred);
        const double numeric = t::golden_section_min([&](t::Quad x) { return scale_objective(gt, pred, x); }, -100, 100);
        worst = std::max(worst, std::abs(s - numeric));
    }
    return {ex1 && ex2 && ex3 && worst <= 1e-10,
            std::string("examples ") + (ex1 && ex2 && ex3 ? "exact" : "WRONG") + "; 100 trajectories, max |closed - numeric| " +
                fmt("%.1e (<= 1e-10)", worst)};
}

Verdict metrics() {
    Rng rng(5);
    bool chamfer_exact = true;
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = t::random_points(rng, 500, 1.5), b = t::random_points(rng, 500, 1.5);
        chamfer_exact &= geo::chamfer(a, b) == t::brute_chamfer(a, b);
    }
    geo::Trajectory traj;
    for (int f = 0; f < 10; ++f) {
        traj.centers.push_back(V3(normal01(rng), normal01(rng), normal01(rng)));
        traj.rotations.push_back(t::random_rotation(rng));
    }
    const auto pe = geo::pose_error(traj, traj);
    const FeatureMapD gt(32, 32, 3, 0.5), pred(32, 32, 3, 0.6);
    const double psnr = geo::masked_psnr_ssim(pred, gt, std::vector<std::uint8_t>(32 * 32, 1)).psnr;
    const bool ok = chamfer_exact && pe.translation_cm == 0.0 && pe.rotation_deg == 0.0 && std::abs(psnr - 20.0) <= 0.01;
    return {ok, std::string("chamfer k-d ") + (chamfer_exact ? "==" : "!=") + " brute force on 500-point clouds; pose_error(identity) = (" +
                    fmt("%g", pe.translation_cm) + fmt(", %g)", pe.rotation_deg) + "; PSNR " + fmt("%.4f dB", psnr)};
}

Verdict view_selection() {
    Rng rng(17);
    std::size_t worst_slack = 1000;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5 + static_cast<int>(uniform_index(rng, 60));
        const int ng = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::min(21, n - 1))));
        std::vector<Eigen::Matrix4d> poses;
        for (int i = 0; i < n; ++i) poses.push_back(t::random_pose(rng, uniform(rng, 0.1, 3.0)));
        if (trial % 10 == 0) poses[1] = poses[0];
        const auto g = prep::build_graph(poses, ng);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.degree(i) < static_cast<std::size_t>(ng))
                return fail("trial " + std::to_string(trial) + ": node below N_g neighbours");
            worst_slack = std::min(worst_slack, g.degree(i) - static_cast<std::size_t>(ng));
        }
    }
    const prep::ViewGroupConfig d;
    const std::vector<int> inputs(std::begin(prep::kInputCounts), std::end(prep::kInputCounts));
    const bool defaults = d.group_size == 21 && d.anchors == 3 && d.iou_threshold == 0.4 && d.easy_fraction == 0.60 &&
                          inputs == std::vector<int>{1, 3, 6, 9, 12};
    return {defaults, "100 pose sets, min degree >= N_g everywhere; defaults N_group=21 K=3 tau=0.4 easy=0.60 P={1,3,6,9,12} " +
                          std::string(defaults ? "honored" : "WRONG")};
}

Verdict voxel_pruning() {
    // 380 occupied unit voxels: 120 hold 27 Gaussians and 260 hold 26, 10k in total
    Rng rng(42);
    std::vector<Gaussian> gs;
    std::vector<Eigen::Vector3f> centers;
    for (int cell = 0; cell < 380; ++cell) {
        const Eigen::Vector3f corner(static_cast<float>(cell % 8 - 4), static_cast<float>((cell / 8) % 8 - 4),
                                     static_cast<float>(cell / 64 - 3));
        const int members = cell < 120 ? 27 : 26;
        for (int m = 0; m < members; ++m) {
            Gaussian g;
            g.position = corner + Eigen::Vector3f(static_cast<float>(uniform(rng, 0.02, 0.98)),
                                                  static_cast<float>(uniform(rng, 0.02, 0.98)),
                                                  static_cast<float>(uniform(rng, 0.02, 0.98)));
            g.scale = Eigen::Vector3f::Constant(0.05f);
            g.opacity = static_cast<float>(uniform01(rng));
            gs.push_back(g);
            centers.push_back(g.position);
        }
    }
    const GaussianScene scene(std::move(gs));
    const auto once = prep::voxel_prune(scene, 1.0);
    const auto twice = prep::voxel_prune(once.scene, 1.0);
    const std::size_t oracle = t::occupied_voxels(centers, 1.0);
    const bool ok = scene.size() == 10000 && once.kept.size() == oracle && std::abs(once.prune_rate - 0.962) < 1e-12 &&
                    twice.kept.size() == once.scene.size() && twice.prune_rate == 0.0;
    return {ok, "N=" + std::to_string(scene.size()) + ", voxel 1.0: kept " + std::to_string(once.kept.size()) +
                    " = brute-force occupied " + std::to_string(oracle) + fmt(", prune rate %.4f", once.prune_rate) +
                    ", second pass keeps " + std::to_string(twice.kept.size())};
}

Verdict toy_trainer() {
    using namespace adapter;
    const auto task = make_toy_task(0);
    FusionConfig fc;
    fc.channels = 8;
    fc.refine_blocks = 2;
    const auto init = FusionParams<double>::random(fc, 1, 0.1);
    const TrainConfig cfg;  // 200 steps, lr 1, feature weight 0.05
    const auto a = toy_train(task, init, cfg);
    const auto b = toy_train(task, init, cfg);
    bool same = a.curve.size() == b.curve.size();
    for (std::size_t i = 0; same && i < a.curve.size(); ++i) same = a.curve[i].total == b.curve[i].total;
    const double first = a.curve.front().total, last = a.curve.back().total;
    return {same && last < 0.1 * first && cfg.steps == 200,
            std::to_string(cfg.steps) + " steps: " + fmt("%.4g", first) + " -> " + fmt("%.4g", last) +
                fmt(" (ratio %.4f < 0.1), ", last / first) + (same ? "curve deterministic" : "curves DIFFER")};
}

Verdict performance() {
    const auto scene = make_bench_scene(100000, 32, 7);
    const auto cam = ring_cameras(1, 384, 384, 2.5, V3(0.5, 0.5, 0.5))[0];
    RasterConfig cfg;
    cfg.threads = 1;
    cfg.record_contributions = false;
    rasterize_features<float>(scene, cam, cfg);  // warm-up
    double best = 1e300;
    for (int r = 0; r < 3; ++r) {
        const auto start = Clock::now();
        rasterize_features<float>(scene, cam, cfg);
        best = std::min(best, seconds_since(start));
    }
    return {best <= 4.0, "100k Gaussians, 384x384, C=32, 1 thread: " + fmt("%.3f s (ceiling 4 s, soft target 2 s)", best)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"compositing", compositing},
        {"lift-contract", lift_contract},
        {"round-trip", round_trip},
        {"adjoint", adjoint},
        {"gradients", gradients},
        {"zero-gate", zero_gate},
        {"scale-alignment", scale_alignment},
        {"metrics", metrics},
        {"view-selection", view_selection},
        {"voxel-pruning", voxel_pruning},
        {"toy-trainer", toy_trainer},
        {"performance", performance},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Verdict v;
        try {
            v = run();
        } catch (const std::exception& e) {
            v = fail(std::string("exception: ") + e.what());
        }
        failures += !v.pass;
        std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
