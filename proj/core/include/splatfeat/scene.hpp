#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "splatfeat/feature_map.hpp"

namespace splatfeat {

inline constexpr int kMaxShDegree = 3;
inline constexpr int kShCoeffs = (kMaxShDegree + 1) * (kMaxShDegree + 1);

constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

/// One 3D Gaussian in activated form: opacity in [0,1], positive
/// per-axis standard deviations, unit quaternion.
struct Gaussian {
    Eigen::Vector3f position = Eigen::Vector3f::Zero();
    /// Unit quaternion, stored (w, x, y, z).
    Eigen::Vector4f rotation{1.f, 0.f, 0.f, 0.f};
    Eigen::Vector3f scale = Eigen::Vector3f::Ones();
    float opacity = 1.f;
    /// Spherical-harmonic coefficients, sh[k * 3 + channel] for k < 16.
    std::array<float, kShCoeffs * 3> sh{};

    float sh_at(int coeff, int channel) const { return sh[coeff * 3 + channel]; }
    float& sh_at(int coeff, int channel) { return sh[coeff * 3 + channel]; }
};

struct BoundingBox {
    Eigen::Vector3f min = Eigen::Vector3f::Zero();
    Eigen::Vector3f max = Eigen::Vector3f::Zero();

    bool contains(const Eigen::Vector3f& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    Eigen::Vector3f extent() const { return max - min; }
};

/// Immutable Gaussian set plus optional per-Gaussian feature rows.
///
/// Construction validates every Gaussian (finite fields, positive scales,
/// opacity in [0,1], non-zero quaternion) and normalizes quaternions.
/// Geometry is shared between copies, so attaching features is cheap.
class GaussianScene {
public:
    GaussianScene() : gaussians_(std::make_shared<const std::vector<Gaussian>>()) {}
    explicit GaussianScene(std::vector<Gaussian> gaussians, int sh_degree = 0,
                           float bbox_padding = 0.f);

    std::size_t size() const { return gaussians_->size(); }
    bool empty() const { return gaussians_->empty(); }
    std::span<const Gaussian> gaussians() const { return *gaussians_; }
    const Gaussian& operator[](std::size_t i) const { return (*gaussians_)[i]; }
    int sh_degree() const { return sh_degree_; }
    const BoundingBox& bbox() const { return bbox_; }

    bool has_features() const { return features_ != nullptr; }
    /// N x C feature matrix; throws PreconditionError when absent.
    const RowMatrix<double>& features() const;
    int feature_channels() const { return features_ ? static_cast<int>(features_->cols()) : 0; }

    /// Same geometry with the given N x C features (rows must equal size()).
    GaussianScene with_features(RowMatrix<double> features) const;
    GaussianScene without_features() const;
    /// Keeps the Gaussians at the given (ascending) indices, with their features.
    GaussianScene subset(std::span<const std::size_t> indices) const;

private:
    std::shared_ptr<const std::vector<Gaussian>> gaussians_;
    std::shared_ptr<const RowMatrix<double>> features_;
    BoundingBox bbox_;
    int sh_degree_ = 0;
    float bbox_padding_ = 0.f;
};

/// Exact min/max of the centers, grown by padding * extent on each side.
BoundingBox compute_bbox(std::span<const Gaussian> gaussians, float padding = 0.f);

}  // namespace splatfeat
