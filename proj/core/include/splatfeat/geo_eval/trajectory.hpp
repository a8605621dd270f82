#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "splatfeat/camera.hpp"

namespace splatfeat::geo {

/// Camera centers and world-to-camera rotations of a sequence of frames.
struct Trajectory {
    std::vector<Eigen::Vector3d> centers;
    std::vector<Eigen::Matrix3d> rotations;

    static Trajectory from_cameras(std::span<const CameraView> cameras);
    std::size_t size() const { return centers.size(); }
    /// Throws ValidationError when empty, when the lists differ in length
    /// or when a rotation is not orthonormal.
    void validate() const;
};

/// s* = argmin_s sum_f ||C_gt_f - s C_pred_f||^2
///    = sum_f <C_gt_f, C_pred_f> / sum_f ||C_pred_f||^2.
/// Throws PreconditionError when the lengths differ or every predicted
/// center is zero.
double align_scale(std::span<const Eigen::Vector3d> gt, std::span<const Eigen::Vector3d> pred);

struct PoseError {
    double translation_cm = 0;  // mean center error
    double rotation_deg = 0;    // mean geodesic angle
};

/// Centers are taken relative to each trajectory's first center and the
/// prediction is rescaled with align_scale; no rotational alignment is
/// applied. T_err = mean ||dC_gt - s* dC_pred|| * scene_scale * 100;
/// R_err = mean arccos((tr(R_gt^T R_pred) - 1) / 2) in degrees, comparing
/// the rotations as given. When every relative predicted center is zero
/// the scale is left at 1.
PoseError pose_error(const Trajectory& gt, const Trajectory& pred, double scene_scale = 1.0);

/// Geodesic angle between two rotations, in degrees.
double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace splatfeat::geo
