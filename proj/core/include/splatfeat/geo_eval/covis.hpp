#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "splatfeat/camera.hpp"
#include "splatfeat/feature_map.hpp"

namespace splatfeat::geo {

struct CovisMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> visible;  // row-major, 1 = co-visible

    std::size_t count() const;
    CovisMask inverted() const;
};

/// A novel-view pixel is co-visible when some reference point lands in it
/// (nearest pixel center, z > 0) with |z - D| <= tol * D, where D is the
/// novel view's depth at that pixel. Pixels whose depth is not finite and
/// positive are never co-visible.
CovisMask covis_mask(std::span<const Eigen::Vector3d> reference_points, const CameraView& novel_view,
                     const FeatureMap<double>& novel_depth, double tol = 0.05);

}  // namespace splatfeat::geo
