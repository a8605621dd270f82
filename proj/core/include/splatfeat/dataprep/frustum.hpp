#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "splatfeat/camera.hpp"

namespace splatfeat::prep {

struct DepthRange {
    double near = 0.1;
    double far = 10.0;
};

struct FrustumConfig {
    DepthRange range;
    /// Monte-Carlo samples drawn inside each of the two frusta.
    int samples = 100000;
    int threads = 0;
};

/// Volume of the truncated pyramid spanned by the image over [near, far]:
/// W H / (fx fy) * (far^3 - near^3) / 3.
double frustum_volume(const CameraView& view, const DepthRange& range);

/// True when the world point projects inside the image with camera depth
/// in [near, far].
bool in_frustum(const CameraView& view, const DepthRange& range, const Eigen::Vector3d& world);

/// Volumetric IoU of two view frusta. Points are drawn uniformly in each
/// frustum; the fractions landing in the other frustum give two estimates
/// of the intersection volume, which are averaged:
///   I = (f_ab V_a + f_ba V_b) / 2,  IoU = I / (V_a + V_b - I).
/// Deterministic in seed for any thread count. Throws PreconditionError
/// unless 0 < near < far and samples > 0.
double frustum_iou(const CameraView& a, const DepthRange& range_a, const CameraView& b,
                   const DepthRange& range_b, int samples, std::uint64_t seed, int threads = 0);
double frustum_iou(const CameraView& a, const CameraView& b, const FrustumConfig& cfg = {},
                   std::uint64_t seed = 0);

}  // namespace splatfeat::prep
