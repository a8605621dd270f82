#include "splatfeat/geo_eval/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "splatfeat/error.hpp"

namespace splatfeat::geo {

Trajectory Trajectory::from_cameras(std::span<const CameraView> cameras) {
    Trajectory t;
    for (const auto& cam : cameras) {
        t.centers.push_back(cam.center());
        t.rotations.push_back(cam.rotation());
    }
    return t;
}

void Trajectory::validate() const {
    if (centers.empty()) throw ValidationError("trajectory is empty");
    if (centers.size() != rotations.size())
        throw ValidationError("trajectory has " + std::to_string(centers.size()) + " centers but " +
                              std::to_string(rotations.size()) + " rotations");
    for (std::size_t i = 0; i < rotations.size(); ++i) {
        const double dev = (rotations[i].transpose() * rotations[i] - Eigen::Matrix3d::Identity()).norm();
        if (!(dev <= 1e-4))
            throw ValidationError("trajectory rotation " + std::to_string(i) + " is not orthonormal");
    }
}

double align_scale(std::span<const Eigen::Vector3d> gt, std::span<const Eigen::Vector3d> pred) {
    if (gt.size() != pred.size())
        throw PreconditionError("align_scale: trajectories have different lengths");
    if (gt.empty()) throw PreconditionError("align_scale: empty trajectories");
    double num = 0, den = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        num += gt[i].dot(pred[i]);
        den += pred[i].squaredNorm();
    }
    if (den == 0.0) throw PreconditionError("align_scale: predicted centers are all zero");
    return num / den;
}

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    // arccos((tr(A^T B) - 1) / 2) via |A - B|_F = 2 sqrt2 sin(theta / 2), exact for A = B
    const double half = std::min(1.0, (a - b).norm() / (2.0 * std::sqrt(2.0)));
    return 2.0 * std::asin(half) * 180.0 / M_PI;
}

PoseError pose_error(const Trajectory& gt, const Trajectory& pred, double scene_scale) {
    gt.validate();
    pred.validate();
    if (gt.size() != pred.size())
        throw PreconditionError("pose_error: trajectories have " + std::to_string(gt.size()) + " and " +
                                std::to_string(pred.size()) + " frames");
    const std::size_t n = gt.size();
    std::vector<Eigen::Vector3d> rel_gt(n), rel_pred(n);
    bool moving = false;
    for (std::size_t i = 0; i < n; ++i) {
        rel_gt[i] = gt.centers[i] - gt.centers[0];
        rel_pred[i] = pred.centers[i] - pred.centers[0];
        moving = moving || rel_pred[i].squaredNorm() > 0.0;
    }
    const double s = moving ? align_scale(rel_gt, rel_pred) : 1.0;
    PoseError err;
    for (std::size_t i = 0; i < n; ++i) {
        err.translation_cm += (rel_gt[i] - s * rel_pred[i]).norm();
        err.rotation_deg += rotation_angle_deg(gt.rotations[i], pred.rotations[i]);
    }
    err.translation_cm = err.translation_cm / static_cast<double>(n) * scene_scale * 100.0;
    err.rotation_deg /= static_cast<double>(n);
    return err;
}

}  // namespace splatfeat::geo
