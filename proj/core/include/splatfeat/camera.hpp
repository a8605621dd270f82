#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace splatfeat {

/// Pinhole camera with a world-to-camera rigid transform.
///
/// Pixel convention: pixel (u, v) has its center at continuous image
/// coordinate (u, v); a camera-space point (x, y, z) lands at
/// (fx * x / z + cx, fy * y / z + cy). The image covers
/// [-0.5, width - 0.5] x [-0.5, height - 0.5]. The camera looks down +z.
struct CameraView {
    std::string id;
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Eigen::Matrix4d world_to_cam = Eigen::Matrix4d::Identity();

    Eigen::Matrix3d rotation() const { return world_to_cam.topLeftCorner<3, 3>(); }
    Eigen::Vector3d translation() const { return world_to_cam.topRightCorner<3, 1>(); }
    /// C = -R^T t.
    Eigen::Vector3d center() const { return -rotation().transpose() * translation(); }
    /// Unit viewing direction (camera +z) in world coordinates.
    Eigen::Vector3d forward() const { return rotation().row(2).transpose(); }

    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
        return rotation() * world + translation();
    }
    /// Image coordinates of a camera-space point (z must be positive).
    Eigen::Vector2d project(const Eigen::Vector3d& cam) const {
        return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy};
    }

    /// Same camera at 1/factor resolution (latent grid of a VAE-style
    /// downsampler). Intrinsics follow the pixel-center convention.
    CameraView downsampled(int factor) const;

    /// Throws ValidationError unless fx, fy > 0, width, height > 0 and the
    /// rotation block is orthonormal (Frobenius deviation <= 1e-4) with det +1.
    void validate() const;
};

/// Builds a world-to-camera transform for a camera at `eye` looking at
/// `target`, with image "down" (+y) roughly along -up.
Eigen::Matrix4d look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& up = Eigen::Vector3d::UnitY());

/// Reads a JSON array of {id, fx, fy, cx, cy, width, height, world_to_cam}
/// objects (world_to_cam: 16 row-major numbers). Validates every camera.
std::vector<CameraView> load_cameras(const std::filesystem::path& path);
std::vector<CameraView> parse_cameras(const std::string& json_text);
void save_cameras(const std::filesystem::path& path, std::span<const CameraView> cameras);
std::string dump_cameras(std::span<const CameraView> cameras);

}  // namespace splatfeat
