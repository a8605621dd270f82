#pragma once

#include <Eigen/Core>

#include "splatfeat/scene.hpp"

namespace splatfeat {

inline constexpr float kShC0 = 0.28209479177387814f;

/// RGB from the degree-0 coefficient: max(0, 0.5 + C0 * dc).
Eigen::Vector3f sh_dc_color(const Gaussian& g);

/// RGB from coefficients up to `degree` evaluated along the unit world
/// direction `dir` (camera center to Gaussian), clamped at zero.
Eigen::Vector3f sh_color(const Gaussian& g, int degree, const Eigen::Vector3f& dir);

}  // namespace splatfeat
