#include "generators.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace splatfeat::testing {

CameraView front_camera(int width, int height, double focal, const std::string& id) {
    CameraView cam;
    cam.id = id;
    cam.width = width;
    cam.height = height;
    cam.fx = cam.fy = focal;
    cam.cx = (width - 1) / 2.0;
    cam.cy = (height - 1) / 2.0;
    return cam;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
    Eigen::Quaterniond q(normal01(rng), normal01(rng), normal01(rng), normal01(rng));
    if (q.norm() < 1e-9) q = Eigen::Quaterniond::Identity();
    return q.normalized().toRotationMatrix();
}

Eigen::Matrix4d random_pose(Rng& rng, double extent) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = random_rotation(rng);
    for (int a = 0; a < 3; ++a) m(a, 3) = uniform(rng, -extent, extent);
    return m;
}

SceneCase random_scene(Rng& rng, int max_gaussians, int width, int height, int channels) {
    SceneCase out;
    out.view = front_camera(width, height, 0.9 * width);
    const int n = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(max_gaussians)));
    std::vector<Gaussian> gs;
    for (int i = 0; i < n; ++i) {
        if (i > 0 && uniform01(rng) < 0.1) {
            gs.push_back(gs[uniform_index(rng, gs.size())]);  // exact depth tie
            gs.back().opacity = static_cast<float>(uniform(rng, 0.05, 1.0));
            continue;
        }
        Gaussian g;
        const double z = uniform01(rng) < 0.05 ? uniform(rng, -2.0, 0.0) : uniform(rng, 1.0, 5.0);
        const double u = uniform(rng, -0.2, 1.2) * width, v = uniform(rng, -0.2, 1.2) * height;
        const double az = std::abs(z) + 1e-3;
        g.position = Eigen::Vector3f(static_cast<float>((u - out.view.cx) * az / out.view.fx),
                                     static_cast<float>((v - out.view.cy) * az / out.view.fy),
                                     static_cast<float>(z));
        Eigen::Vector4d q(normal01(rng), normal01(rng), normal01(rng), normal01(rng));
        g.rotation = q.normalized().cast<float>();
        for (int a = 0; a < 3; ++a) g.scale[a] = static_cast<float>(std::exp(uniform(rng, std::log(0.01), std::log(0.4))));
        g.opacity = static_cast<float>(uniform01(rng) < 0.2 ? uniform(rng, 0.9, 1.0) : uniform(rng, 0.0, 1.0));
        for (int c = 0; c < 3; ++c) g.sh_at(0, c) = static_cast<float>(normal01(rng));
        gs.push_back(g);
    }
    RowMatrix<double> f(n, channels);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < channels; ++c) f(i, c) = normal01(rng);
    out.scene = GaussianScene(std::move(gs)).with_features(std::move(f));
    return out;
}

std::vector<Eigen::Vector3d> random_points(Rng& rng, std::size_t n, double extent) {
    std::vector<Eigen::Vector3d> pts(n);
    for (auto& p : pts) p = {uniform(rng, -extent, extent), uniform(rng, -extent, extent), uniform(rng, -extent, extent)};
    return pts;
}

std::vector<CameraView> random_cameras(Rng& rng, std::size_t n, double extent) {
    std::vector<CameraView> cams;
    for (std::size_t i = 0; i < n; ++i) {
        CameraView c = front_camera(64, 48, 60.0, "c" + std::to_string(i));
        c.world_to_cam = random_pose(rng, extent);
        cams.push_back(c);
    }
    return cams;
}

}  // namespace splatfeat::testing
