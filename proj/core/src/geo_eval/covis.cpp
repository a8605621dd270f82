#include "splatfeat/geo_eval/covis.hpp"

#include <algorithm>
#include <cmath>

#include "splatfeat/error.hpp"

namespace splatfeat::geo {

std::size_t CovisMask::count() const {
    return static_cast<std::size_t>(std::count(visible.begin(), visible.end(), std::uint8_t{1}));
}

CovisMask CovisMask::inverted() const {
    CovisMask m = *this;
    for (auto& v : m.visible) v = v ? 0 : 1;
    return m;
}

CovisMask covis_mask(std::span<const Eigen::Vector3d> reference_points, const CameraView& novel_view,
                     const FeatureMap<double>& novel_depth, double tol) {
    if (novel_depth.width != novel_view.width || novel_depth.height != novel_view.height ||
        novel_depth.channels != 1)
        throw PreconditionError("covis_mask: depth map must be H x W x 1 at the view's resolution");
    if (!(tol >= 0.0)) throw PreconditionError("covis_mask: tolerance must be non-negative");
    CovisMask mask{novel_view.width, novel_view.height,
                   std::vector<std::uint8_t>(novel_depth.pixel_count(), 0)};
    for (const auto& pt : reference_points) {
        const Eigen::Vector3d cam = novel_view.to_camera(pt);
        if (!(cam.z() > 0.0)) continue;
        const Eigen::Vector2d uv = novel_view.project(cam);
        const double fu = std::floor(uv.x() + 0.5), fv = std::floor(uv.y() + 0.5);
        if (!(fu >= 0 && fv >= 0 && fu < novel_view.width && fv < novel_view.height)) continue;
        const std::size_t p = static_cast<std::size_t>(fv) * novel_view.width + static_cast<std::size_t>(fu);
        const double d = novel_depth.data[p];
        if (!std::isfinite(d) || !(d > 0.0)) continue;
        if (std::abs(cam.z() - d) <= tol * d) mask.visible[p] = 1;
    }
    return mask;
}

}  // namespace splatfeat::geo
