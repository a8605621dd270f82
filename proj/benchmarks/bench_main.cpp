#include <benchmark/benchmark.h>

#include "splatfeat/geo_eval/chamfer.hpp"
#include "splatfeat/rasterizer.hpp"
#include "splatfeat/rng.hpp"
#include "splatfeat/synthetic.hpp"
#include "splatfeat/uplift.hpp"

namespace {

using namespace splatfeat;

CameraView bench_camera(int size) { return ring_cameras(1, size, size, 2.5, Eigen::Vector3d(0.5, 0.5, 0.5)).front(); }

void BM_RenderFeatures(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const GaussianScene scene = make_bench_scene(n, 32, 1);
    const CameraView cam = bench_camera(static_cast<int>(state.range(1)));
    RasterConfig rc;
    rc.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(rasterize_features<float>(scene, cam, rc));
    state.counters["gaussians/s"] =
        benchmark::Counter(static_cast<double>(n), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_RenderFeatures)->Args({10000, 128})->Args({100000, 384})->Unit(benchmark::kMillisecond);

void BM_Lift(benchmark::State& state) {
    const GaussianScene scene = make_bench_scene(static_cast<std::size_t>(state.range(0)), 32, 2);
    const auto cams = ring_cameras(4, 128, 128, 2.5, Eigen::Vector3d(0.5, 0.5, 0.5));
    std::vector<FeatureMapF> maps;
    std::vector<ContributionMap> contribs;
    RasterConfig rc;
    rc.threads = 1;
    for (const auto& c : cams) {
        auto r = rasterize_features<float>(scene, c, rc);
        maps.push_back(std::move(r.features));
        contribs.push_back(std::move(r.contributions));
    }
    LiftConfig lc;
    lc.threads = 1;
    lc.top_k = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(lift<float>(maps, contribs, scene.size(), lc));
}
BENCHMARK(BM_Lift)->Args({20000, 0})->Args({20000, 1})->Unit(benchmark::kMillisecond);

void BM_Chamfer(benchmark::State& state) {
    Rng rng(3);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<Eigen::Vector3d> a(n), b(n);
    for (auto& p : a) p = {normal01(rng), normal01(rng), normal01(rng)};
    for (auto& p : b) p = {normal01(rng), normal01(rng), normal01(rng)};
    for (auto _ : state) benchmark::DoNotOptimize(geo::chamfer(a, b, 1));
}
BENCHMARK(BM_Chamfer)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
