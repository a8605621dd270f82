#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "splatfeat/camera.hpp"
#include "splatfeat/feature_map.hpp"
#include "splatfeat/scene.hpp"

namespace splatfeat {

inline constexpr std::uint32_t kNoGaussian = std::numeric_limits<std::uint32_t>::max();

struct RasterConfig {
    /// Gaussians with camera-space z <= near_plane are culled.
    float near_plane = 0.01f;
    /// Added to the diagonal of every projected covariance (pixels^2).
    float cov2d_floor = 0.3f;
    float alpha_max = 0.99f;
    /// Contributions with alpha below this are skipped.
    float alpha_min = 1.f / 255.f;
    /// Compositing stops before a contribution that would drop
    /// transmittance below this value.
    float transmittance_min = 1e-4f;
    /// Per-pixel contributor cap; compositing stops once it is reached.
    int max_contributors = 255;
    int tile_size = 16;
    bool record_contributions = true;
    /// Divide rendered features by accumulated alpha (off: plain weighted sum).
    bool normalize_features = false;
    /// Evaluate SH up to the scene degree instead of the DC term only.
    bool view_dependent_color = false;
    /// Worker threads; <= 0 uses the process default.
    int threads = 0;
};

/// Screen-space footprint of one Gaussian.
struct ProjectedGaussian {
    std::uint32_t gaussian_id = 0;
    Eigen::Vector2f mean2d = Eigen::Vector2f::Zero();
    /// Symmetric 2x2 covariance in pixels^2 (floor included).
    Eigen::Matrix2f cov2d = Eigen::Matrix2f::Identity();
    /// Inverse covariance entries (a, b, c) of [[a, b], [b, c]].
    Eigen::Vector3f conic = Eigen::Vector3f::Zero();
    float depth = 0.f;
    float opacity = 0.f;
    /// Pixel radius beyond which alpha provably falls below alpha_min.
    float radius = 0.f;
};

struct ProjectionStats {
    std::size_t culled_near = 0;
    std::size_t culled_offscreen = 0;
};

/// Projects every visible Gaussian: Sigma = R diag(s^2) R^T, then
/// cov2d = J W Sigma W^T J^T + floor * I. Output is in Gaussian index order.
std::vector<ProjectedGaussian> project(const GaussianScene& scene, const CameraView& view,
                                       const RasterConfig& cfg = {},
                                       ProjectionStats* stats = nullptr);

/// Sorts projected Gaussians front to back; equal depths by Gaussian index.
void sort_by_depth(std::vector<ProjectedGaussian>& projected);

struct Contribution {
    std::uint32_t gaussian_id;
    float alpha;
    float weight;
};

/// Per-pixel front-to-back contributor lists in compressed row form.
/// Pixel index p = y * width + x.
struct ContributionMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> offsets;  // pixel_count + 1 entries
    std::vector<Contribution> entries;
    /// Sum of weights per pixel, accumulated front to back.
    std::vector<float> accumulated_alpha;

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    std::span<const Contribution> pixel(std::size_t p) const {
        return {entries.data() + offsets[p], entries.data() + offsets[p + 1]};
    }
    bool operator==(const ContributionMap&) const;
};

inline bool operator==(const Contribution& a, const Contribution& b) {
    return a.gaussian_id == b.gaussian_id && a.alpha == b.alpha && a.weight == b.weight;
}

/// Most contributing Gaussian per pixel (kNoGaussian when none).
struct DominantMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> ids;
    std::vector<float> weights;

    bool operator==(const DominantMap&) const = default;
};

DominantMap dominant_from(const ContributionMap& contributions);

struct ColorRender {
    FeatureMap<float> image;  // H x W x 3
    ContributionMap contributions;
    DominantMap dominant;
};

template <class T>
struct FeatureRender {
    FeatureMap<T> features;  // H x W x C
    ContributionMap contributions;
    DominantMap dominant;
};

ColorRender rasterize_color(const GaussianScene& scene, const CameraView& view,
                            const RasterConfig& cfg = {});

/// F(p) = sum_i f_i w_i(p). Weights are identical to rasterize_color's.
/// Throws PreconditionError when the scene carries no features.
template <class T>
FeatureRender<T> rasterize_features(const GaussianScene& scene, const CameraView& view,
                                    const RasterConfig& cfg = {});

/// Contribution lists only (no color or feature accumulation).
ContributionMap rasterize_weights(const GaussianScene& scene, const CameraView& view,
                                  const RasterConfig& cfg = {});

/// Nearest-point z-buffer (H x W x 1). A point lands in the pixel whose
/// center is nearest its projection; empty pixels hold +infinity.
FeatureMap<double> render_depth_points(std::span<const Eigen::Vector3d> points,
                                       const CameraView& view);
FeatureMap<double> render_depth_points(const GaussianScene& scene, const CameraView& view);

}  // namespace splatfeat
