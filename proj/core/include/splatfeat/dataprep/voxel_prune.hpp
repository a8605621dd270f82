#pragma once

#include <cstddef>
#include <vector>

#include "splatfeat/scene.hpp"

namespace splatfeat::prep {

struct PruneResult {
    GaussianScene scene;
    /// Indices of the kept Gaussians in the input, ascending.
    std::vector<std::size_t> kept;
    double prune_rate = 0;  // 1 - kept / N (0 for an empty scene)
};

/// Bins centers into cubes floor(mu / voxel_size) anchored at the world
/// origin and keeps the highest-opacity Gaussian of every occupied voxel
/// (lowest index on ties). Features of kept Gaussians are preserved.
/// Throws PreconditionError unless voxel_size > 0.
PruneResult voxel_prune(const GaussianScene& scene, double voxel_size);

}  // namespace splatfeat::prep
