#include "splatfeat/synthetic.hpp"

#include <cmath>
#include <string>

#include "splatfeat/error.hpp"
#include "splatfeat/rasterizer.hpp"

namespace splatfeat {

Gaussian random_gaussian(Rng& rng, const Eigen::Vector3f& center, double min_scale,
                         double max_scale, double min_opacity, double max_opacity) {
    Gaussian g;
    g.position = center;
    Eigen::Vector4d q(normal01(rng), normal01(rng), normal01(rng), normal01(rng));
    if (q.norm() < 1e-6) q = Eigen::Vector4d(1, 0, 0, 0);
    g.rotation = q.normalized().cast<float>();
    const double lmin = std::log(min_scale), lmax = std::log(max_scale);
    for (int a = 0; a < 3; ++a) g.scale[a] = static_cast<float>(std::exp(uniform(rng, lmin, lmax)));
    g.opacity = static_cast<float>(uniform(rng, min_opacity, max_opacity));
    for (int ch = 0; ch < 3; ++ch) g.sh_at(0, ch) = static_cast<float>(0.8 * normal01(rng));
    return g;
}

RowMatrix<double> random_unit_rows(Rng& rng, std::size_t rows, int cols) {
    RowMatrix<double> m(static_cast<Eigen::Index>(rows), cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = normal01(rng);
        const double n = m.row(r).norm();
        if (n > 0.0) m.row(r) /= n;
    }
    return m;
}

std::vector<CameraView> ring_cameras(int count, int width, int height, double radius,
                                     const Eigen::Vector3d& target, double elevation) {
    std::vector<CameraView> cams;
    for (int i = 0; i < count; ++i) {
        const double a = 2.0 * M_PI * i / count;
        const Eigen::Vector3d eye = target + Eigen::Vector3d(radius * std::cos(a), -elevation,
                                                             radius * std::sin(a));
        CameraView cam;
        cam.id = "view_" + std::to_string(i);
        cam.width = width;
        cam.height = height;
        cam.fx = cam.fy = 1.1 * width;
        cam.cx = (width - 1) / 2.0;
        cam.cy = (height - 1) / 2.0;
        cam.world_to_cam = look_at(eye, target, Eigen::Vector3d(0, -1, 0));
        cams.push_back(cam);
    }
    return cams;
}

SynthScene make_synthetic(const SynthConfig& cfg) {
    if (cfg.gaussians <= 0 || cfg.views <= 0 || cfg.channels <= 0 || cfg.width <= 0 || cfg.height <= 0)
        throw PreconditionError("synthetic: counts must be positive");
    Rng rng(cfg.seed);
    std::vector<Gaussian> gs;
    gs.reserve(static_cast<std::size_t>(cfg.gaussians));
    for (int i = 0; i < cfg.gaussians; ++i) {
        const Eigen::Vector3f c(static_cast<float>(uniform01(rng)), static_cast<float>(uniform01(rng)),
                                static_cast<float>(uniform01(rng)));
        gs.push_back(random_gaussian(rng, c, cfg.min_scale, cfg.max_scale));
    }
    SynthScene out;
    out.scene = GaussianScene(std::move(gs)).with_features(
        random_unit_rows(rng, static_cast<std::size_t>(cfg.gaussians), cfg.channels));
    out.cameras = ring_cameras(cfg.views, cfg.width, cfg.height, cfg.ring_radius,
                               Eigen::Vector3d(0.5, 0.5, 0.5));
    for (const auto& cam : out.cameras) {
        auto r = rasterize_features<double>(out.scene, cam);
        r.features.view_id = cam.id;
        out.feature_maps.push_back(std::move(r.features));
    }
    return out;
}

GaussianScene make_bench_scene(std::size_t count, int channels, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Gaussian> gs;
    gs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Eigen::Vector3f c(static_cast<float>(uniform01(rng)), static_cast<float>(uniform01(rng)),
                                static_cast<float>(uniform01(rng)));
        gs.push_back(random_gaussian(rng, c, 0.002, 0.012, 0.2, 1.0));
    }
    return GaussianScene(std::move(gs)).with_features(random_unit_rows(rng, count, channels));
}

SynthScene make_isolated(int width, int height, int cell, int channels, std::uint64_t seed) {
    if (cell < 8) throw PreconditionError("isolated scene: cell must be at least 8 pixels");
    Rng rng(seed);
    CameraView cam;
    cam.id = "isolated";
    cam.width = width;
    cam.height = height;
    cam.fx = cam.fy = 100.0;
    cam.cx = (width - 1) / 2.0;
    cam.cy = (height - 1) / 2.0;
    const double depth = 2.0;
    std::vector<Gaussian> gs;
    // Footprint radius must stay below cell / 2 after culling at alpha 1/255:
    // sigma_px * sqrt(2 ln(255)) ~= 3.33 sigma_px, plus the 0.3 px^2 floor.
    const double max_sigma_px = cell / 2.0 / 3.6 - 0.2;
    for (int gy = 0; gy + cell <= height; gy += cell) {
        for (int gx = 0; gx + cell <= width; gx += cell) {
            const double u = gx + (cell - 1) / 2.0 + uniform(rng, -0.5, 0.5);
            const double v = gy + (cell - 1) / 2.0 + uniform(rng, -0.5, 0.5);
            const Eigen::Vector3f p(static_cast<float>((u - cam.cx) * depth / cam.fx),
                                    static_cast<float>((v - cam.cy) * depth / cam.fy),
                                    static_cast<float>(depth));
            Gaussian g = random_gaussian(rng, p, 0.8 * depth / cam.fx,
                                         max_sigma_px * depth / cam.fx, 1.0, 1.0);
            g.opacity = 1.f;
            gs.push_back(g);
        }
    }
    if (gs.empty()) throw PreconditionError("isolated scene: image smaller than one cell");
    SynthScene out;
    const std::size_t n = gs.size();
    out.scene = GaussianScene(std::move(gs)).with_features(random_unit_rows(rng, n, channels));
    out.cameras = {cam};
    auto r = rasterize_features<double>(out.scene, cam);
    r.features.view_id = cam.id;
    out.feature_maps.push_back(std::move(r.features));
    return out;
}

}  // namespace splatfeat
