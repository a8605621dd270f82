#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>

#include "commands.hpp"
#include "splatfeat/adapter/gradcheck.hpp"
#include "splatfeat/dataprep/voxel_prune.hpp"
#include "splatfeat/error.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/synthetic.hpp"

namespace splatfeat::cli {

using nlohmann::json;

namespace {

constexpr double kGradTolerance = 1e-5;

struct GradOpts {
    int trials = 20;
    double step = 1e-6;
};

int run_gradcheck(const GradOpts& o, const Common& c, std::ostream& out) {
    RunManifest m("gradcheck", c);
    const auto results = adapter::run_gradcheck(o.trials, c.seed, o.step);
    json ops = json::object();
    bool ok = true;
    for (const auto& r : results) {
        const bool pass = r.max_relative_error <= kGradTolerance;
        ok = ok && pass;
        ops[r.op] = {{"trials", r.trials}, {"max_relative_error", r.max_relative_error}, {"pass", pass}};
        out << std::left << std::setw(16) << r.op << std::scientific << std::setprecision(3)
            << r.max_relative_error << (pass ? "  ok" : "  FAIL") << '\n';
    }
    out << std::defaultfloat;
    m.config() = {{"trials", o.trials}, {"step", o.step}, {"tolerance", kGradTolerance}};
    m.results() = {{"ops", ops}, {"pass", ok}};
    m.finish();
    return ok ? kExitOk : kExitValidation;
}

struct BenchOpts {
    std::size_t gaussians = 100000;
    int width = 384;
    int height = 384;
    int channels = 32;
    int repeat = 3;
    double voxel_size = 0.05;
    double ceiling_ms = 4000;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> time_render(const GaussianScene& scene, const CameraView& cam, const RasterConfig& rc,
                                 int repeat) {
    std::vector<double> ms;
    for (int i = 0; i < repeat; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = rasterize_features<float>(scene, cam, rc);
        const auto t1 = std::chrono::steady_clock::now();
        if (r.features.data.empty()) throw Error("bench: empty render");
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return ms;
}

int run_bench(const BenchOpts& o, const Common& c, std::ostream& out) {
    if (o.gaussians == 0 || o.width <= 0 || o.height <= 0 || o.channels <= 0 || o.repeat <= 0)
        throw ValidationError("bench: counts must be positive");
    RunManifest m("bench", c);
    const GaussianScene scene = make_bench_scene(o.gaussians, o.channels, c.seed);
    const CameraView cam = ring_cameras(1, o.width, o.height, 2.5, Eigen::Vector3d(0.5, 0.5, 0.5)).front();
    RasterConfig rc;
    rc.threads = c.threads;

    const auto full = time_render(scene, cam, rc, o.repeat);
    const auto pruned = prep::voxel_prune(scene, o.voxel_size);
    const auto after = time_render(pruned.scene, cam, rc, o.repeat);
    const double ms = median(full), ms_pruned = median(after);
    const bool within = ms <= o.ceiling_ms;
    const bool faster = ms_pruned <= ms;

    m.config() = {{"gaussians", o.gaussians}, {"width", o.width},           {"height", o.height},
                  {"channels", o.channels},   {"repeat", o.repeat},         {"voxel_size", o.voxel_size},
                  {"ceiling_ms", o.ceiling_ms}};
    m.results() = {{"ms_per_frame", ms},
                   {"gaussians_per_sec", static_cast<double>(o.gaussians) / (ms / 1000.0)},
                   {"runs_ms", full},
                   {"pruned_gaussians", pruned.kept.size()},
                   {"prune_rate", pruned.prune_rate},
                   {"pruned_ms_per_frame", ms_pruned},
                   {"pruned_runs_ms", after},
                   {"within_ceiling", within},
                   {"pruned_faster", faster}};
    m.finish();
    out << "render " << o.gaussians << " Gaussians " << o.width << "x" << o.height << " C=" << o.channels
        << " threads=" << c.threads << ": " << ms << " ms/frame, "
        << static_cast<double>(o.gaussians) / (ms / 1000.0) << " Gaussians/s\n"
        << "pruned to " << pruned.kept.size() << " (rate " << pruned.prune_rate << "): " << ms_pruned
        << " ms/frame\n";
    if (!within) out << "FAIL: median " << ms << " ms exceeds the " << o.ceiling_ms << " ms ceiling\n";
    if (!faster) out << "FAIL: pruned scene rendered slower\n";
    return within && faster ? kExitOk : kExitValidation;
}

}  // namespace

void register_check_commands(CLI::App& app, Registry& reg) {
    {
        auto o = std::make_shared<GradOpts>();
        Entry& e = add_command(app, reg, "gradcheck", "Finite-difference check of every analytic gradient");
        e.app->add_option("--trials", o->trials, "Random instances per op")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        e.app->add_option("--step", o->step, "Central-difference step")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        e.run = [o](const Common& c, std::ostream& out) { return run_gradcheck(*o, c, out); };
    }
    {
        auto o = std::make_shared<BenchOpts>();
        Entry& e = add_command(app, reg, "bench", "Time feature rendering before and after voxel pruning");
        e.app->add_option("--gaussians", o->gaussians, "Gaussian count")->capture_default_str();
        e.app->add_option("--width", o->width, "Image width")->capture_default_str();
        e.app->add_option("--height", o->height, "Image height")->capture_default_str();
        e.app->add_option("--channels", o->channels, "Feature channels")->capture_default_str();
        e.app->add_option("--repeat", o->repeat, "Timed renders (median reported)")->capture_default_str();
        e.app->add_option("--voxel-size", o->voxel_size, "Pruning voxel edge")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        e.app->add_option("--ceiling-ms", o->ceiling_ms, "Fail above this median")->capture_default_str();
        // single-threaded unless asked otherwise, so timings compare across machines
        CLI::App* sub = e.app;
        e.run = [o, sub](const Common& c, std::ostream& out) {
            Common single = c;
            if (sub->count("--threads") == 0 && std::getenv("SPLATFEAT_THREADS") == nullptr) single.threads = 1;
            return run_bench(*o, single, out);
        };
    }
}

}  // namespace splatfeat::cli
