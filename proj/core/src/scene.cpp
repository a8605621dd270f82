#include "splatfeat/scene.hpp"

#include <cmath>
#include <string>

namespace splatfeat {
namespace {

bool finite(const Gaussian& g) {
    if (!g.position.allFinite() || !g.rotation.allFinite() || !g.scale.allFinite() ||
        !std::isfinite(g.opacity))
        return false;
    for (float v : g.sh)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

BoundingBox compute_bbox(std::span<const Gaussian> gaussians, float padding) {
    BoundingBox box;
    if (gaussians.empty()) return box;
    box.min = box.max = gaussians.front().position;
    for (const auto& g : gaussians) {
        box.min = box.min.cwiseMin(g.position);
        box.max = box.max.cwiseMax(g.position);
    }
    if (padding > 0.f) {
        const Eigen::Vector3f grow = padding * box.extent();
        box.min -= grow;
        box.max += grow;
    }
    return box;
}

GaussianScene::GaussianScene(std::vector<Gaussian> gaussians, int sh_degree, float bbox_padding)
    : sh_degree_(sh_degree), bbox_padding_(bbox_padding) {
    if (sh_degree < 0 || sh_degree > kMaxShDegree)
        throw PreconditionError("sh degree must be in [0, 3], got " + std::to_string(sh_degree));
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        auto& g = gaussians[i];
        const auto where = " at gaussian " + std::to_string(i);
        if (!finite(g)) throw ValidationError("non-finite value" + where);
        if ((g.scale.array() <= 0.f).any()) throw ValidationError("non-positive scale" + where);
        if (g.opacity < 0.f || g.opacity > 1.f)
            throw ValidationError("opacity outside [0,1]" + where);
        const Eigen::Vector4d q = g.rotation.cast<double>();
        const double n = q.norm();
        if (n == 0.0) throw ValidationError("zero quaternion" + where);
        // Already-unit quaternions are left untouched so re-validation is idempotent.
        if (std::abs(n - 1.0) > 1e-7) g.rotation = (q / n).cast<float>();
    }
    bbox_ = compute_bbox(gaussians, bbox_padding);
    gaussians_ = std::make_shared<const std::vector<Gaussian>>(std::move(gaussians));
}

const RowMatrix<double>& GaussianScene::features() const {
    if (!features_) throw PreconditionError("scene has no per-Gaussian features");
    return *features_;
}

GaussianScene GaussianScene::with_features(RowMatrix<double> features) const {
    if (static_cast<std::size_t>(features.rows()) != size())
        throw PreconditionError("feature rows (" + std::to_string(features.rows()) +
                                ") != gaussian count (" + std::to_string(size()) + ")");
    GaussianScene out = *this;
    out.features_ = std::make_shared<const RowMatrix<double>>(std::move(features));
    return out;
}

GaussianScene GaussianScene::without_features() const {
    GaussianScene out = *this;
    out.features_.reset();
    return out;
}

GaussianScene GaussianScene::subset(std::span<const std::size_t> indices) const {
    std::vector<Gaussian> kept;
    kept.reserve(indices.size());
    for (auto i : indices) kept.push_back((*gaussians_)[i]);
    GaussianScene out(std::move(kept), sh_degree_, bbox_padding_);
    if (features_) {
        RowMatrix<double> f(static_cast<Eigen::Index>(indices.size()), features_->cols());
        for (std::size_t r = 0; r < indices.size(); ++r)
            f.row(static_cast<Eigen::Index>(r)) = features_->row(static_cast<Eigen::Index>(indices[r]));
        out.features_ = std::make_shared<const RowMatrix<double>>(std::move(f));
    }
    return out;
}

}  // namespace splatfeat
