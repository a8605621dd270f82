#pragma once

#include <filesystem>

#include "splatfeat/scene.hpp"

namespace splatfeat {

/// Loads a binary little-endian PLY with the 3D-GS vertex layout
/// (x, y, z, f_dc_0..2, f_rest_*, opacity, scale_0..2, rot_0..3).
///
/// Stored values are pre-activation: opacity goes through a logistic
/// sigmoid, scales through exp, quaternions are normalized. The number of
/// f_rest properties (0, 9, 24 or 45) fixes the SH degree. If a feature
/// sidecar (see feature_sidecar_path) sits next to the file it is loaded too.
///
/// Throws ParseError naming the missing property for malformed headers and
/// ValidationError with the first offending vertex for non-finite values.
GaussianScene load_ply(const std::filesystem::path& path);

/// Writes the scene in the same layout. Pre-activation values are chosen
/// so that load_ply reproduces every activated field. Features, when
/// present, go to the sidecar as an f64 FTC1 N x C tensor.
void save_ply(const GaussianScene& scene, const std::filesystem::path& path);

/// "<dir>/<stem>.features.ftc" for "<dir>/<stem>.ply".
std::filesystem::path feature_sidecar_path(const std::filesystem::path& ply_path);

}  // namespace splatfeat
