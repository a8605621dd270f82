#include "splatfeat/dataprep/frustum.hpp"

#include <cmath>
#include <vector>

#include "splatfeat/error.hpp"
#include "splatfeat/parallel.hpp"
#include "splatfeat/rng.hpp"

namespace splatfeat::prep {

namespace {

constexpr std::size_t kChunk = 4096;

void check_range(const DepthRange& r) {
    if (!(r.near > 0.0) || !(r.far > r.near) || !std::isfinite(r.far))
        throw PreconditionError("frustum: depth range must satisfy 0 < near < far");
}

// Fraction of `samples` uniform points in frustum `from` that fall inside `to`.
double inside_fraction(const CameraView& from, const DepthRange& rf, const CameraView& to,
                       const DepthRange& rt, int samples, std::uint64_t seed, int threads) {
    const std::size_t n = static_cast<std::size_t>(samples);
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<std::size_t> hits(chunks, 0);
    const Eigen::Matrix3d rt_from = from.rotation().transpose();
    const Eigen::Vector3d center = from.center();
    const double n3 = rf.near * rf.near * rf.near, f3 = rf.far * rf.far * rf.far;
    parallel_for(chunks, resolve_threads(threads), [&](std::size_t b, std::size_t e) {
        for (std::size_t c = b; c < e; ++c) {
            Rng rng(derive_seed(seed, c));
            const std::size_t end = std::min(n, (c + 1) * kChunk);
            std::size_t h = 0;
            for (std::size_t i = c * kChunk; i < end; ++i) {
                const double u = uniform(rng, -0.5, from.width - 0.5);
                const double v = uniform(rng, -0.5, from.height - 0.5);
                // density proportional to z^2 makes the sample uniform in volume
                const double z = std::cbrt(n3 + uniform01(rng) * (f3 - n3));
                const Eigen::Vector3d cam((u - from.cx) * z / from.fx, (v - from.cy) * z / from.fy, z);
                if (in_frustum(to, rt, rt_from * cam + center)) ++h;
            }
            hits[c] = h;
        }
    });
    std::size_t total = 0;
    for (std::size_t h : hits) total += h;
    return static_cast<double>(total) / static_cast<double>(n);
}

}  // namespace

double frustum_volume(const CameraView& view, const DepthRange& range) {
    check_range(range);
    const double f3 = range.far * range.far * range.far, n3 = range.near * range.near * range.near;
    return static_cast<double>(view.width) * view.height / (view.fx * view.fy) * (f3 - n3) / 3.0;
}

bool in_frustum(const CameraView& view, const DepthRange& range, const Eigen::Vector3d& world) {
    const Eigen::Vector3d cam = view.to_camera(world);
    if (!(cam.z() >= range.near && cam.z() <= range.far)) return false;
    const Eigen::Vector2d uv = view.project(cam);
    return uv.x() >= -0.5 && uv.x() <= view.width - 0.5 && uv.y() >= -0.5 && uv.y() <= view.height - 0.5;
}

double frustum_iou(const CameraView& a, const DepthRange& range_a, const CameraView& b,
                   const DepthRange& range_b, int samples, std::uint64_t seed, int threads) {
    check_range(range_a);
    check_range(range_b);
    if (samples <= 0) throw PreconditionError("frustum_iou: sample count must be positive");
    const double va = frustum_volume(a, range_a), vb = frustum_volume(b, range_b);
    const double fab = inside_fraction(a, range_a, b, range_b, samples, derive_seed(seed, 1), threads);
    const double fba = inside_fraction(b, range_b, a, range_a, samples, derive_seed(seed, 2), threads);
    const double inter = 0.5 * (fab * va + fba * vb);
    const double uni = va + vb - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

double frustum_iou(const CameraView& a, const CameraView& b, const FrustumConfig& cfg, std::uint64_t seed) {
    return frustum_iou(a, cfg.range, b, cfg.range, cfg.samples, seed, cfg.threads);
}

}  // namespace splatfeat::prep
